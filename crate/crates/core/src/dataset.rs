//! Training sets built from planning problems: candidate robot plans within
//! a cost slack of the optimum, scored by a rule file and paired with their
//! distance vectors.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distances::{DistanceConfig, PlanProfile};
use crate::epp::ExplicablePlanningProblem;
use crate::expected::{expected_profiles, generate_expected_set, select_closest, ExpectedError};
use crate::planner::{enumerate_loopless, optimal_plan, PlanError};
use crate::regression::LabeledSample;
use crate::scoring::{RuleSet, ScoringError};
use crate::task::{GroundTask, Plan, TaskError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Expected(#[from] ExpectedError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("more than {cap} candidate plans")]
    TooManyCandidates { cap: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetOptions {
    /// Candidates cost at most the robot optimum plus this.
    pub cost_slack: u64,
    /// Candidates kept per problem, chosen by a seeded shuffle.
    pub per_problem: usize,
    pub k_expected: usize,
    pub distance: DistanceConfig,
    pub seed: u64,
    /// Enumeration stops with an error beyond this many candidates.
    pub enumeration_cap: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            cost_slack: 2,
            per_problem: 40,
            k_expected: 16,
            distance: DistanceConfig::default(),
            seed: 0,
            enumeration_cap: 200_000,
        }
    }
}

/// Loopless robot plans with cost at most `bound`, in lexicographic
/// action-id order.
pub fn candidate_plans(task: &GroundTask, bound: u64, cap: usize) -> Result<Vec<Plan>, DatasetError> {
    let mut plans = Vec::new();
    let mut over = false;
    enumerate_loopless(task, bound, usize::MAX, |actions, cost| {
        if plans.len() == cap {
            over = true;
            return ControlFlow::Break(());
        }
        plans.push(Plan { actions: actions.to_vec(), cost });
        ControlFlow::Continue(())
    })?;
    if over {
        return Err(DatasetError::TooManyCandidates { cap });
    }
    Ok(plans)
}

/// Rule-scored samples for one problem. Provenance is `name#k` with `k` the
/// candidate's position in lexicographic order.
pub fn rule_labeled_samples(
    name: &str,
    epp: &ExplicablePlanningProblem,
    rules: &RuleSet,
    options: &DatasetOptions,
) -> Result<Vec<LabeledSample>, DatasetError> {
    let opt = optimal_plan(&epp.robot)?;
    let candidates = candidate_plans(&epp.robot, opt.cost + options.cost_slack, options.enumeration_cap)?;
    let mut chosen: Vec<usize> = (0..candidates.len()).collect();
    if chosen.len() > options.per_problem {
        chosen.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
        chosen.truncate(options.per_problem);
        chosen.sort_unstable();
    }
    let set = generate_expected_set(&epp.human, options.k_expected)?;
    let expected = expected_profiles(&epp.human, &set, &options.distance)?;
    chosen
        .into_iter()
        .map(|k| {
            let plan = &candidates[k];
            let names: Vec<&str> = plan.names(&epp.robot).collect();
            let score = rules.score(&names)?;
            let profile = PlanProfile::robot(&epp.robot, plan, &epp.mapping, options.distance.link_mode)?;
            let sel = select_closest(profile.view(), &expected, false, options.distance.composite)
                .ok_or(ExpectedError::EmptyExpectedSet)?;
            Ok(LabeledSample::new(sel.features, score, format!("{name}#{k}")))
        })
        .collect()
}
