mod common;

use common::*;
use explicable::dataset::{candidate_plans, rule_labeled_samples, DatasetOptions};
use explicable::epp::EppError;
use explicable::pddl::{parse_domain, parse_problem, ParseError};
use explicable::planfile::{format_plan, read_plan, PlanFileError};
use explicable::planner::optimal_plan;
use explicable::scoring::{glob_match, RuleSet, ScoringError};
use explicable::{ExplicablePlanningProblem, Plan};

#[test]
fn every_fixture_grounds() {
    let tasks = all_tasks();
    assert!(tasks.len() >= 50);
    for (name, t) in &tasks {
        assert!(!t.actions().is_empty(), "{name}");
        assert!(!t.goal().is_empty(), "{name}");
    }
}

#[test]
fn negative_preconditions_become_complement_fluents() {
    let t = task("car/robot.pddl", "car/problems/test/01-lanechange.pddl");
    let on = t.action_by_name(&t.actions().iter().find(|a| a.schema == "LeftLightOn").unwrap().name).unwrap();
    let comp = t.fluent_id("(not (left-light-on))").expect("complement fluent");
    assert!(t.fluents()[comp].derived);
    assert!(on.pre.contains(&comp));
    assert!(on.del.contains(&comp));
    // initially the light is off, so the complement holds
    assert!(t.initial_state().contains(comp));
    assert!(!t.state_names(&t.initial_state(), false).iter().any(|n| n.starts_with("(not")));
}

#[test]
fn parse_errors_are_specific() {
    let domain = read("toy/graph/domain.pddl");
    assert!(matches!(parse_domain("(define (domain x)"), Err(ParseError::Syntax { .. })));
    assert!(matches!(
        parse_domain(&domain.replace("(edge ?a ?b))\n    :effect", "(edge ?a))\n    :effect")),
        Err(ParseError::ArityMismatch { .. })
    ));
    assert!(matches!(parse_domain(&domain.replace("(at ?b)", "(near ?b)")), Err(ParseError::UnknownPredicate(_))));
    let d = parse_domain(&domain).unwrap();
    let problem = read("toy/graph/chain.pddl");
    assert!(matches!(parse_problem(&problem.replace("(edge n0 n1)", "(edge n0 n9)"), &d), Err(ParseError::UnknownObject(_))));
    assert!(matches!(
        parse_problem(&problem.replace("(:domain graph)", "(:domain other)"), &d),
        Err(ParseError::DomainMismatch { .. })
    ));
    assert!(matches!(parse_problem(&problem.replace("- node)", "- place)"), &d), Err(ParseError::UnknownType(_))));
}

#[test]
fn mismatched_problems_are_rejected() {
    let r = task("car/robot.pddl", "car/problems/test/01-lanechange.pddl");
    let h = task("car/human.pddl", "car/problems/test/02-lanechange-right.pddl");
    assert!(matches!(
        ExplicablePlanningProblem::new(r, h, Default::default()),
        Err(EppError::GoalMismatch { .. }) | Err(EppError::InitMismatch { .. })
    ));
}

#[test]
fn plan_files_round_trip() {
    for (name, t) in all_tasks() {
        let p = optimal_plan(&t).unwrap();
        let text = format_plan(&t, &p);
        assert_eq!(read_plan(&t, &text).unwrap(), p, "{name}");
    }
    let t = task("delivery/robot.pddl", "delivery/problems/p02.pddl");
    let text = format_plan(&t, &optimal_plan(&t).unwrap());
    assert!(matches!(read_plan(&t, &text.replace("= 7", "= 8")), Err(PlanFileError::CostMismatch { .. })));
    assert!(matches!(read_plan(&t, "(fly depot office)\n"), Err(PlanFileError::UnknownAction { .. })));
    // a skipped step is caught by validation, not by reading
    let short: String = text.lines().skip(1).map(|l| format!("{l}\n")).filter(|l| !l.starts_with(';')).collect();
    let p = read_plan(&t, &short).unwrap();
    assert!(t.validate_plan(&p).is_err());
}

fn ids(t: &explicable::GroundTask, names: &[&str]) -> Plan {
    Plan::new(t, names.iter().map(|n| t.actions().iter().find(|a| a.signature() == *n).unwrap().id).collect()).unwrap()
}

#[test]
fn car_rules_prefer_signalling_first() {
    let rules = RuleSet::parse(&read("car/rules.txt")).unwrap();
    let t = task("car/robot.pddl", "car/problems/test/01-lanechange.pddl");
    let score = |p: &Plan| rules.score(&p.names(&t).collect::<Vec<_>>()).unwrap();
    let late = ids(&t, &["(LeftSqueeze l2 l1)", "(LeftLightOn)", "(LeftSqueezeMid l2 l1)", "(LeftSqueezeEnd l2 l1)"]);
    let early = ids(&t, &["(LeftLightOn)", "(LeftSqueeze l2 l1)", "(LeftSqueezeMid l2 l1)", "(LeftSqueezeEnd l2 l1)"]);
    assert_eq!(score(&late), 0.75);
    assert_eq!(score(&early), 1.0);
    assert_eq!(rules.score::<&str>(&[]).unwrap(), 1.0);
}

#[test]
fn rule_semantics() {
    let rules = RuleSet::parse("explicable a*\nbefore b* x\nafter c y\n# comment\n").unwrap();
    assert_eq!(rules.labels(&["a1", "x", "b"]), Err(ScoringError::UncoveredAction("x".into())));
    let rules = RuleSet::parse("explicable *\nbefore b* x\nafter c y\n").unwrap();
    assert_eq!(rules.labels(&["b1", "x", "b2", "c", "y", "c"]).unwrap(), vec![true, true, false, false, true, true]);
    assert!(matches!(RuleSet::parse("explicable\n"), Err(ScoringError::Syntax { line: 1, .. })));
    assert!(glob_match("*Squeeze*", "LeftSqueezeMid_l2_l1"));
    assert!(glob_match("a*c", "abc") && !glob_match("a*c", "abd"));
    assert!(glob_match("*", ""));
}

#[test]
fn rule_labelled_samples_are_seeded() {
    let rules = RuleSet::parse(&read("car/rules.txt")).unwrap();
    let e = epp("car", "car/problems/train/tr-merge-l3-l2.pddl");
    let opts = DatasetOptions { per_problem: 10, seed: 3, ..Default::default() };
    let a = rule_labeled_samples("m", &e, &rules, &opts).unwrap();
    assert_eq!(a, rule_labeled_samples("m", &e, &rules, &opts).unwrap());
    assert_eq!(a.len(), 10);
    assert!(a.iter().all(|s| (0.0..=1.0).contains(&s.score)));
    let b = rule_labeled_samples("m", &e, &rules, &DatasetOptions { seed: 4, ..opts }).unwrap();
    assert_ne!(a, b);
    let all = candidate_plans(&e.robot, optimal_plan(&e.robot).unwrap().cost + 2, 100_000).unwrap();
    assert!(all.len() > 10);
}
