mod common;

use common::*;
use explicable::expected::{generate_expected_set, ExpectedError};
use explicable::planner::{optimal_plan, optimal_plan_with, Heuristic, PlanError, PlannerOptions};

#[test]
fn optimal_cost_matches_exhaustive_search() {
    for (name, task) in all_tasks() {
        let got = optimal_plan(&task).unwrap();
        assert_eq!(task.plan_cost(&got.actions).unwrap(), got.cost, "{name}");
        assert!(task.validate_plan(&got).is_ok(), "{name}");
        // any cheaper plan would lie inside this bound too
        let plans = oracle_loopless_plans(&task, got.cost + 1, 100_000, 2_000_000).expect(&name);
        assert_eq!(plans.iter().map(|p| p.1).min(), Some(got.cost), "{name}");
    }
}

#[test]
fn small_tasks_match_unbounded_enumeration() {
    let mut checked = 0;
    for (name, task) in all_tasks() {
        let Some(plans) = oracle_loopless_plans(&task, u64::MAX, 10_000, 200_000) else { continue };
        assert_eq!(plans.iter().map(|p| p.1).min(), Some(optimal_plan(&task).unwrap().cost), "{name}");
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} tasks were small enough");
}

#[test]
fn blind_search_agrees_with_hmax() {
    for (name, task) in all_tasks() {
        let h = optimal_plan(&task).unwrap();
        let b = optimal_plan_with(&task, &PlannerOptions { heuristic: Heuristic::Blind, ..Default::default() }).unwrap();
        assert_eq!(h.cost, b.plan.cost, "{name}");
    }
}

#[test]
fn recorded_optima() {
    for (domain, problem, cost) in [
        ("delivery/robot.pddl", "delivery/problems/p01.pddl", 13),
        ("delivery/human.pddl", "delivery/problems/p01.pddl", 17),
        ("delivery/robot.pddl", "delivery/problems/p02.pddl", 7),
        ("delivery/human.pddl", "delivery/problems/p03.pddl", 26),
        ("car/robot.pddl", "car/problems/test/07-merge-left.pddl", 2),
        ("car/human.pddl", "car/problems/test/07-merge-left.pddl", 4),
        ("toy/graph/domain.pddl", "toy/graph/chain.pddl", 4),
    ] {
        assert_eq!(optimal_plan(&task(domain, problem)).unwrap().cost, cost, "{problem} under {domain}");
    }
}

#[test]
fn unsolvable_and_budget() {
    let t = task("toy/graph/domain.pddl", "toy/graph/unreachable.pddl");
    assert_eq!(optimal_plan(&t), Err(PlanError::Unsolvable));
    assert!(matches!(generate_expected_set(&t, 4), Err(ExpectedError::Plan(PlanError::Unsolvable))));
    let grid = task("toy/graph/domain.pddl", "toy/graph/grid.pddl");
    let r = optimal_plan_with(&grid, &PlannerOptions { max_expansions: 1, ..Default::default() });
    assert!(matches!(r, Err(PlanError::ResourceLimit { .. })));
}

#[test]
fn expected_sets_are_all_optimal_plans() {
    for (name, task) in all_tasks() {
        let set = generate_expected_set(&task, 64).unwrap();
        let Some(all) = oracle_loopless_plans(&task, set.optimal_cost, 10_000, 2_000_000) else { continue };
        let optimal: Vec<_> = all.into_iter().filter(|p| p.1 == set.optimal_cost).map(|p| p.0).collect();
        let got: Vec<_> = set.plans.iter().map(|p| p.actions.clone()).collect();
        if optimal.len() <= 64 {
            assert_eq!(got, optimal, "{name}");
            assert!(!set.meta.truncated, "{name}");
        } else {
            assert_eq!(got, optimal[..64], "{name}");
            assert!(set.meta.truncated, "{name}");
        }
    }
}

#[test]
fn expected_set_truncation_is_reported() {
    let grid = task("toy/graph/domain.pddl", "toy/graph/grid.pddl");
    let full = generate_expected_set(&grid, 64).unwrap();
    assert_eq!(full.len(), 6);
    assert!(!full.meta.truncated);
    let cut = generate_expected_set(&grid, 4).unwrap();
    assert_eq!(cut.plans[..], full.plans[..4]);
    assert!(cut.meta.truncated);
    let exact = generate_expected_set(&grid, 6).unwrap();
    assert!(!exact.meta.truncated);
    assert_eq!(generate_expected_set(&grid, 0), Err(ExpectedError::InvalidK));
    let diamond = task("toy/graph/domain.pddl", "toy/graph/diamond.pddl");
    assert_eq!(generate_expected_set(&diamond, 64).unwrap().len(), 2);
}
