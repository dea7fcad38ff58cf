//! Typed instantiation of action schemas into a [`GroundTask`].
//!
//! Negative preconditions are compiled into complement fluents named
//! `(not (p ...))`, so consumers only ever see positive STRIPS. Static
//! pruning is purely syntactic: an instantiation is dropped when one of its
//! positive precondition atoms is neither initially true nor added by any
//! instantiation, or when a negated atom is initially true and never deleted.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::pddl::{Atom, DomainModel, GroundAtom, ProblemInstance, Term};
use crate::task::{ground_action_name, Fluent, GroundAction, GroundTask, TaskError};

pub const DEFAULT_MAX_GROUND_ACTIONS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundError {
    #[error("grounding would produce {count} candidate actions, above the cap of {cap}")]
    GroundingExplosion { count: u128, cap: usize },
    #[error("two ground actions share the name `{0}`")]
    AmbiguousActionName(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, Copy)]
pub struct GroundingOptions {
    pub max_actions: usize,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions { max_actions: DEFAULT_MAX_GROUND_ACTIONS }
    }
}

struct Candidate {
    schema: String,
    args: Vec<String>,
    pos: Vec<GroundAtom>,
    neg: Vec<GroundAtom>,
    add: Vec<GroundAtom>,
    del: Vec<GroundAtom>,
    cost: u64,
}

fn complement_name(atom: &GroundAtom) -> String {
    format!("(not {atom})")
}

pub fn ground(domain: &DomainModel, problem: &ProblemInstance) -> Result<GroundTask, GroundError> {
    ground_with(domain, problem, &GroundingOptions::default())
}

pub fn ground_with(
    domain: &DomainModel,
    problem: &ProblemInstance,
    options: &GroundingOptions,
) -> Result<GroundTask, GroundError> {
    let objects: Vec<(&str, &str)> = domain
        .constants
        .iter()
        .chain(problem.objects.iter())
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();

    // candidate objects per parameter, in declaration order
    let mut domains_per_schema = Vec::with_capacity(domain.action_schemas.len());
    let mut total: u128 = 0;
    for schema in &domain.action_schemas {
        let per_param: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| objects.iter().filter(|(_, ty)| domain.is_subtype(ty, &p.ty)).map(|(n, _)| *n).collect())
            .collect();
        let count = per_param.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
        total = total.saturating_add(count);
        if total > options.max_actions as u128 {
            return Err(GroundError::GroundingExplosion { count: total, cap: options.max_actions });
        }
        domains_per_schema.push(per_param);
    }

    let mut candidates = Vec::new();
    for (schema, per_param) in domain.action_schemas.iter().zip(&domains_per_schema) {
        if per_param.iter().any(Vec::is_empty) {
            continue;
        }
        let mut choice = vec![0usize; per_param.len()];
        'instances: loop {
            let binding: BTreeMap<&str, &str> =
                schema.params.iter().zip(&choice).enumerate().map(|(i, (p, &c))| (p.name.as_str(), per_param[i][c])).collect();
            let inst = |a: &Atom| GroundAtom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => binding[v.as_str()].to_string(),
                        Term::Const(c) => c.clone(),
                    })
                    .collect(),
            };
            let pos: Vec<GroundAtom> = schema.precondition.iter().filter(|l| l.positive).map(|l| inst(&l.atom)).collect();
            let neg: Vec<GroundAtom> = schema.precondition.iter().filter(|l| !l.positive).map(|l| inst(&l.atom)).collect();
            // p and (not p) together can never hold
            if !pos.iter().any(|p| neg.contains(p)) {
                candidates.push(Candidate {
                    schema: schema.name.clone(),
                    args: choice.iter().enumerate().map(|(i, &c)| per_param[i][c].to_string()).collect(),
                    pos,
                    neg,
                    add: schema.add.iter().map(inst).collect(),
                    del: schema.del.iter().map(inst).collect(),
                    cost: schema.cost,
                });
            }
            // odometer, last parameter fastest
            let mut k = choice.len();
            loop {
                if k == 0 {
                    break 'instances;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < per_param[k].len() {
                    continue 'instances;
                }
                choice[k] = 0;
            }
        }
    }

    let init: BTreeSet<&GroundAtom> = problem.init.iter().collect();
    let addable: HashSet<&GroundAtom> = candidates.iter().flat_map(|c| c.add.iter()).collect();
    let deletable: HashSet<&GroundAtom> = candidates.iter().flat_map(|c| c.del.iter()).collect();
    let keep: Vec<bool> = candidates
        .iter()
        .map(|c| {
            c.pos.iter().all(|p| init.contains(p) || addable.contains(p))
                && c.neg.iter().all(|p| !init.contains(p) || deletable.contains(p))
        })
        .collect();
    let kept: Vec<&Candidate> = candidates.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c).collect();

    let negated: BTreeSet<&GroundAtom> = kept.iter().flat_map(|c| c.neg.iter()).collect();
    let mut names: BTreeMap<String, bool> = BTreeMap::new();
    for atom in problem.init.iter().chain(&problem.goal) {
        names.insert(atom.to_string(), false);
    }
    for c in &kept {
        for atom in c.pos.iter().chain(&c.neg).chain(&c.add).chain(&c.del) {
            names.insert(atom.to_string(), false);
        }
    }
    for atom in &negated {
        names.insert(complement_name(atom), true);
    }
    let fluents: Vec<Fluent> = names.into_iter().map(|(name, derived)| Fluent { name, derived }).collect();
    let id_of: BTreeMap<&str, usize> = fluents.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
    let id = |a: &GroundAtom| id_of[a.to_string().as_str()];
    let cid = |a: &GroundAtom| id_of[complement_name(a).as_str()];

    let mut ordered = kept;
    ordered.sort_by(|a, b| (&a.schema, &a.args).cmp(&(&b.schema, &b.args)));
    let mut seen_names = HashSet::new();
    let mut actions = Vec::with_capacity(ordered.len());
    for (i, c) in ordered.iter().enumerate() {
        let name = ground_action_name(&c.schema, &c.args);
        if !seen_names.insert(name.clone()) {
            return Err(GroundError::AmbiguousActionName(name));
        }
        let mut pre: Vec<usize> = c.pos.iter().map(id).collect();
        pre.extend(c.neg.iter().map(cid));
        let add_set: HashSet<&GroundAtom> = c.add.iter().collect();
        let mut add: Vec<usize> = c.add.iter().map(id).collect();
        // (s \ del) ∪ add: an atom both deleted and added ends up true
        let mut del: Vec<usize> = c.del.iter().filter(|d| !add_set.contains(d)).map(id).collect();
        for atom in &negated {
            if add_set.contains(atom) {
                del.push(cid(atom));
            } else if c.del.contains(atom) {
                add.push(cid(atom));
            }
        }
        actions.push(GroundAction {
            id: i,
            name,
            schema: c.schema.clone(),
            args: c.args.clone(),
            pre,
            add,
            del,
            cost: c.cost,
        });
    }

    let mut init_ids: Vec<usize> = problem.init.iter().map(id).collect();
    init_ids.extend(negated.iter().filter(|a| !init.contains(*a)).map(|a| cid(a)));
    let goal_ids: Vec<usize> = problem.goal.iter().map(id).collect();
    Ok(GroundTask::new(problem.name.clone(), fluents, actions, init_ids, goal_ids)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    #[test]
    fn one_parameter_three_objects() {
        let d = parse_domain(
            "(define (domain c) (:requirements :strips :typing) (:types box)
             (:predicates (seen ?b - box)) (:action look :parameters (?b - box) :effect (seen ?b)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem p) (:domain c) (:objects a b c - box) (:init) (:goal (and)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        let names: Vec<&str> = t.actions().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, vec!["look-a", "look-b", "look-c"]);
    }

    #[test]
    fn prunes_unreachable_precondition() {
        let d = parse_domain(
            "(define (domain c) (:requirements :strips) (:predicates (p) (q) (never))
             (:action a :parameters () :precondition (p) :effect (q))
             (:action b :parameters () :precondition (never) :effect (q)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem p) (:domain c) (:init (p)) (:goal (q)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        assert!(t.action_by_name("a").is_some());
        assert!(t.action_by_name("b").is_none());
    }

    #[test]
    fn negative_preconditions_become_complements() {
        let d = parse_domain(
            "(define (domain c) (:requirements :strips :negative-preconditions) (:predicates (on) (done))
             (:action switch :parameters () :precondition (not (on)) :effect (on))
             (:action off :parameters () :precondition (on) :effect (not (on)))
             (:action finish :parameters () :precondition (and (on) (not (done))) :effect (done)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem p) (:domain c) (:init) (:goal (done)))", &d).unwrap();
        let t = ground(&d, &p).unwrap();
        let not_on = t.fluent_id("(not (on))").unwrap();
        assert!(t.fluents()[not_on].derived);
        assert!(t.init().contains(&not_on));
        let s0 = t.initial_state();
        let sw = t.action_by_name("switch").unwrap().id;
        let s1 = t.apply(&s0, sw).unwrap();
        assert!(!s1.contains(not_on));
        assert!(t.apply(&s1, sw).is_err());
        let off = t.action_by_name("off").unwrap().id;
        let s2 = t.apply(&s1, off).unwrap();
        assert!(s2.contains(not_on));
    }

    #[test]
    fn explosion_cap() {
        let d = parse_domain(
            "(define (domain c) (:requirements :strips) (:predicates (r ?a ?b ?c))
             (:action a :parameters (?a ?b ?c) :effect (r ?a ?b ?c)))",
        )
        .unwrap();
        let p = parse_problem("(define (problem p) (:domain c) (:objects o1 o2 o3 o4 o5) (:init) (:goal (and)))", &d).unwrap();
        let err = ground_with(&d, &p, &GroundingOptions { max_actions: 100 }).unwrap_err();
        assert!(matches!(err, GroundError::GroundingExplosion { count: 125, cap: 100 }));
        assert_eq!(ground(&d, &p).unwrap().actions().len(), 125);
    }
}
