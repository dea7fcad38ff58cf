mod common;

use std::collections::BTreeSet;

use common::*;
use explicable::distances::{DistanceConfig, PlanProfile};
use explicable::expected::{expected_profiles, generate_expected_set, select_closest};
use explicable::planner::optimal_plan;
use explicable::regression::{synthetic_samples, train_forest, ForestParams, ModelFile, RegressionModel, RidgeModel};
use explicable::search::{
    brute_force_explicable, plan_score, reconciliation_search, reconciliation_search_with_index, ExpectedPrefixIndex,
    SearchError, SearchOptions, DEFAULT_K_EXPECTED,
};
use explicable::{CompositeKind, LinkMode};

fn models() -> Vec<RegressionModel> {
    vec![
        RegressionModel::Ridge(RidgeModel { lambda: 0.0, weights: [-1.0 / 3.0; 3], intercept: 1.0 }),
        RegressionModel::Ridge(RidgeModel { lambda: 0.0, weights: [-0.8, 0.1, -0.3], intercept: 0.9 }),
        RegressionModel::Forest(
            train_forest(&synthetic_samples(60, 0.05, 3), ForestParams { n_trees: 10, ..Default::default() }, 3).unwrap(),
        ),
    ]
}

#[test]
fn exhaustive_search_emits_every_plan_once() {
    let mut checked = 0;
    for (name, epp) in all_epps() {
        let bound = optimal_plan(&epp.robot).unwrap().cost + 2;
        let Some(all) = oracle_loopless_plans(&epp.robot, bound, 500, 1_000_000) else { continue };
        let want: BTreeSet<Vec<usize>> = all.iter().map(|p| p.0.clone()).collect();
        let set = generate_expected_set(&epp.human, DEFAULT_K_EXPECTED).unwrap();
        let index = ExpectedPrefixIndex::new(&epp.human, &set, DistanceConfig::default()).unwrap();
        for model in models() {
            let stream =
                reconciliation_search_with_index(&epp.robot, &epp.mapping, &index, bound, &model, 1_000_000, &mut |_| {})
                    .unwrap();
            assert!(stream.exhausted);
            let got: Vec<Vec<usize>> = stream.solutions.iter().map(|s| s.plan.actions.clone()).collect();
            assert_eq!(got.len(), want.len(), "{name}: duplicates or misses");
            assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want, "{name}");
            let oracle_best = all
                .iter()
                .map(|p| plan_score(&epp.robot, &p.0, &index, &model, &epp.mapping).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            let best = stream.best().unwrap();
            assert!((best.score - oracle_best).abs() < 1e-9, "{name}");
            let bf = brute_force_explicable(&epp.robot, &epp.mapping, &index, bound, &model, 500).unwrap();
            assert!((bf.score - oracle_best).abs() < 1e-9, "{name}");
            for s in &stream.solutions {
                assert!(s.cost <= bound);
                assert_eq!(epp.robot.plan_cost(&s.plan.actions).unwrap(), s.cost);
            }
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} problems were small enough");
}

#[test]
fn best_so_far_never_decreases() {
    for (name, epp) in all_epps() {
        let bound = optimal_plan(&epp.robot).unwrap().cost + 1;
        for model in models() {
            let opts = SearchOptions { budget: 50_000, ..Default::default() };
            let stream = match reconciliation_search(&epp, bound, &model, &opts, &mut |_| {}) {
                Ok(s) => s,
                Err(SearchError::ResourceLimit { stream }) => stream,
                Err(e) => panic!("{name}: {e}"),
            };
            let curve = stream.best_so_far();
            assert!(curve.windows(2).all(|w| w[0] <= w[1]), "{name}");
            assert_eq!(curve.last().copied(), stream.best().map(|b| b.score));
        }
    }
}

#[test]
fn witness_improves_after_the_first_solution() {
    let epp = epp("toy/witness", "toy/witness/problem.pddl");
    let model = ModelFile::from_json(&read("toy/witness/model.json")).unwrap().model;
    let mut seen = Vec::new();
    let stream = reconciliation_search(&epp, 3, &model, &SearchOptions::default(), &mut |s| seen.push(s.index)).unwrap();
    assert_eq!(seen, vec![0, 1]);
    let names: Vec<Vec<&str>> = stream.solutions.iter().map(|s| s.plan.names(&epp.robot).collect()).collect();
    assert_eq!(names, vec![vec!["A", "X1", "X2"], vec!["Z", "B", "C"]]);
    assert!(stream.solutions[0].score < stream.solutions[1].score);
    assert_eq!(stream.best, Some(1));
}

#[test]
fn budget_exhaustion_keeps_the_partial_stream() {
    let epp = epp("car", "car/problems/test/05-double-lanechange.pddl");
    let model = models().remove(0);
    let bound = optimal_plan(&epp.robot).unwrap().cost + 2;
    let opts = SearchOptions { budget: 40, ..Default::default() };
    match reconciliation_search(&epp, bound, &model, &opts, &mut |_| {}) {
        Err(SearchError::ResourceLimit { stream }) => {
            assert!(!stream.exhausted);
            assert_eq!(stream.expanded, 40);
        }
        other => panic!("expected a resource limit, got {other:?}"),
    }
}

#[test]
fn squared_sum_and_raw_sum_pick_the_same_plan() {
    let epp = epp("delivery", "delivery/problems/p03.pddl");
    let set = generate_expected_set(&epp.human, 64).unwrap();
    let cfg = DistanceConfig { link_mode: LinkMode::LiteralAdjacent, composite: CompositeKind::SquaredSum };
    let expected = expected_profiles(&epp.human, &set, &cfg).unwrap();
    for plan in plan_pool(&epp.robot, 4, 40) {
        let p = PlanProfile::robot(&epp.robot, &plan, &epp.mapping, LinkMode::LiteralAdjacent).unwrap();
        let sel = select_closest(p.view(), &expected, false, CompositeKind::SquaredSum).unwrap();
        let sums: Vec<f64> = expected
            .iter()
            .map(|e| explicable::distances::distance_vector(p.view(), e.view()).sum())
            .collect();
        let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(sel.chosen, sums.iter().position(|&s| s == min).unwrap());
    }
}
