//! Explicable planning problems: a robot model and a human mental model of
//! it over one fluent universe, with shared initial state and goal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ground::{ground, GroundError};
use crate::mapping::ActionMapping;
use crate::pddl::{parse_domain, parse_problem, ParseError};
use crate::task::{Fluent, GroundTask, TaskError};

#[derive(Debug, Error)]
pub enum EppError {
    #[error("{model} model: {source}")]
    Parse { model: &'static str, source: ParseError },
    #[error("{model} model: {source}")]
    Ground { model: &'static str, source: GroundError },
    #[error("initial states differ: robot-only {robot_only:?}, human-only {human_only:?}")]
    InitMismatch { robot_only: Vec<String>, human_only: Vec<String> },
    #[error("goals differ: robot-only {robot_only:?}, human-only {human_only:?}")]
    GoalMismatch { robot_only: Vec<String>, human_only: Vec<String> },
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone)]
pub struct ExplicablePlanningProblem {
    pub robot: GroundTask,
    pub human: GroundTask,
    pub mapping: ActionMapping,
}

fn positive_names(task: &GroundTask, ids: &[usize]) -> Vec<String> {
    let mut v: Vec<String> =
        ids.iter().filter(|&&f| !task.fluents()[f].derived).map(|&f| task.fluent_name(f).to_string()).collect();
    v.sort();
    v
}

fn diff(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().filter(|x| b.binary_search(x).is_err()).cloned().collect()
}

impl ExplicablePlanningProblem {
    /// Re-indexes both tasks over the union of their fluent names and checks
    /// that init and goal agree atom by atom (complement fluents excluded).
    pub fn new(robot: GroundTask, human: GroundTask, mapping: ActionMapping) -> Result<Self, EppError> {
        let (ri, hi) = (positive_names(&robot, robot.init()), positive_names(&human, human.init()));
        if ri != hi {
            return Err(EppError::InitMismatch { robot_only: diff(&ri, &hi), human_only: diff(&hi, &ri) });
        }
        let (rg, hg) = (positive_names(&robot, robot.goal()), positive_names(&human, human.goal()));
        if rg != hg {
            return Err(EppError::GoalMismatch { robot_only: diff(&rg, &hg), human_only: diff(&hg, &rg) });
        }
        let mut union: BTreeMap<String, bool> = BTreeMap::new();
        for f in robot.fluents().iter().chain(human.fluents()) {
            union.entry(f.name.clone()).and_modify(|d| *d |= f.derived).or_insert(f.derived);
        }
        let universe: Vec<Fluent> = union.into_iter().map(|(name, derived)| Fluent { name, derived }).collect();
        Ok(ExplicablePlanningProblem { robot: robot.reindexed(&universe)?, human: human.reindexed(&universe)?, mapping })
    }

    /// Parses and grounds both domains against one problem file.
    pub fn from_pddl(
        robot_domain: &str,
        human_domain: &str,
        problem: &str,
        mapping: ActionMapping,
    ) -> Result<Self, EppError> {
        let load = |model: &'static str, text: &str| -> Result<GroundTask, EppError> {
            let d = parse_domain(text).map_err(|source| EppError::Parse { model, source })?;
            let p = parse_problem(problem, &d).map_err(|source| EppError::Parse { model, source })?;
            ground(&d, &p).map_err(|source| EppError::Ground { model, source })
        };
        Self::new(load("robot", robot_domain)?, load("human", human_domain)?, mapping)
    }
}
