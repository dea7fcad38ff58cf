//! The expected plan set (all cost-optimal loopless plans of the human
//! model, up to a cap) and selection of the member closest to a robot plan.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distances::{composite_distance, distance_vector, CompositeKind, DistanceConfig, DistanceVector, PlanProfile, ProfileView};
use crate::mapping::ActionMapping;
use crate::planner::{enumerate_loopless, optimal_plan_with, PlanError, PlannerOptions, DEFAULT_MAX_EXPANSIONS};
use crate::regression::LabeledSample;
use crate::task::{GroundTask, Plan, TaskError};

pub const DEFAULT_K_MAX: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectedError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("the expected plan set is empty")]
    EmptyExpectedSet,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("{plans} plans but {scores} scores")]
    ScoreCountMismatch { plans: usize, scores: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationMeta {
    /// Planner plus enumeration expansions.
    pub expanded: usize,
    /// More optimal plans exist than were kept.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedPlanSet {
    pub plans: Vec<Plan>,
    pub optimal_cost: u64,
    pub meta: GenerationMeta,
}

impl ExpectedPlanSet {
    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }
}

pub fn generate_expected_set(task: &GroundTask, k_max: usize) -> Result<ExpectedPlanSet, ExpectedError> {
    generate_expected_set_with(task, k_max, DEFAULT_MAX_EXPANSIONS)
}

/// Finds the optimal cost with A*, then enumerates loopless plans at that
/// cost in lexicographic action-id order, keeping the first `k_max`.
pub fn generate_expected_set_with(
    task: &GroundTask,
    k_max: usize,
    max_expansions: usize,
) -> Result<ExpectedPlanSet, ExpectedError> {
    if k_max == 0 {
        return Err(ExpectedError::InvalidK);
    }
    let first = optimal_plan_with(task, &PlannerOptions { max_expansions, ..Default::default() })?;
    let optimal_cost = first.plan.cost;
    let mut plans = Vec::new();
    let mut truncated = false;
    let stats = enumerate_loopless(task, optimal_cost, max_expansions, |actions, cost| {
        debug_assert_eq!(cost, optimal_cost);
        if plans.len() == k_max {
            truncated = true;
            return ControlFlow::Break(());
        }
        plans.push(Plan { actions: actions.to_vec(), cost });
        ControlFlow::Continue(())
    })?;
    Ok(ExpectedPlanSet { plans, optimal_cost, meta: GenerationMeta { expanded: first.expanded + stats.expanded, truncated } })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: usize,
    pub features: DistanceVector,
    pub composite: f64,
}

/// Profiles of the expected plans, in set order.
pub fn expected_profiles(
    human_task: &GroundTask,
    set: &ExpectedPlanSet,
    config: &DistanceConfig,
) -> Result<Vec<PlanProfile>, TaskError> {
    set.plans.iter().map(|p| PlanProfile::plain(human_task, p, config.link_mode)).collect()
}

/// Member minimising the composite distance to `robot`; the lowest index
/// wins ties. With `truncate`, each member is cut to the robot view's
/// length first.
pub fn select_closest(
    robot: ProfileView<'_>,
    expected: &[PlanProfile],
    truncate: bool,
    kind: CompositeKind,
) -> Option<SelectionResult> {
    let mut best: Option<SelectionResult> = None;
    for (i, e) in expected.iter().enumerate() {
        let view = if truncate { e.prefix(robot.len()) } else { e.view() };
        let features = distance_vector(robot, view);
        let composite = composite_distance(&features, kind);
        if best.is_none_or(|b| composite < b.composite) {
            best = Some(SelectionResult { chosen: i, features, composite });
        }
    }
    best
}

pub fn distance_minimizing_plan(
    robot_task: &GroundTask,
    robot_plan: &Plan,
    human_task: &GroundTask,
    set: &ExpectedPlanSet,
    mapping: &ActionMapping,
    config: &DistanceConfig,
) -> Result<SelectionResult, ExpectedError> {
    let robot = PlanProfile::robot(robot_task, robot_plan, mapping, config.link_mode)?;
    let expected = expected_profiles(human_task, set, config)?;
    select_closest(robot.view(), &expected, false, config.composite).ok_or(ExpectedError::EmptyExpectedSet)
}

/// Pairs each robot plan's distance vector (against its closest expected
/// plan) with its score.
#[allow(clippy::too_many_arguments)]
pub fn featurize_dataset(
    robot_task: &GroundTask,
    robot_plans: &[Plan],
    human_task: &GroundTask,
    mapping: &ActionMapping,
    config: &DistanceConfig,
    scores: &[f64],
    k_max: usize,
) -> Result<Vec<LabeledSample>, ExpectedError> {
    if robot_plans.len() != scores.len() {
        return Err(ExpectedError::ScoreCountMismatch { plans: robot_plans.len(), scores: scores.len() });
    }
    let set = generate_expected_set(human_task, k_max)?;
    let expected = expected_profiles(human_task, &set, config)?;
    robot_plans
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (plan, &score))| {
            let robot = PlanProfile::robot(robot_task, plan, mapping, config.link_mode)?;
            let sel = select_closest(robot.view(), &expected, false, config.composite)
                .ok_or(ExpectedError::EmptyExpectedSet)?;
            Ok(LabeledSample::new(sel.features, score, format!("{}/{}", robot_task.name(), i)))
        })
        .collect()
}
