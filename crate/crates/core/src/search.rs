//! Cost-bounded anytime search for explicable robot plans.
//!
//! Nodes are plan prefixes in the robot model, expanded greedily by the
//! predicted explicability of the prefix (highest first). Goal nodes are
//! emitted as solutions and the search goes on until the open list is empty
//! or the expansion budget runs out, so the stream of solutions improves
//! over time. Paths are loopless; the same state reached by different
//! prefixes gives different nodes because the heuristic depends on the
//! prefix.
//!
//! The heuristic compares the prefix with every expected plan cut to the
//! prefix's length, picks the closest by composite distance, and feeds that
//! distance vector to the regression model. This stands in for comparing
//! against a human-model plan reaching the same state, which would need a
//! planner call per node.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distances::{DistanceConfig, DistanceVector, PlanProfile};
use crate::epp::ExplicablePlanningProblem;
use crate::expected::{expected_profiles, generate_expected_set, select_closest, ExpectedError, ExpectedPlanSet};
use crate::mapping::{ActionMapping, Direction};
use crate::planner::{enumerate_loopless, HMax, PlanError};
use crate::regression::RegressionModel;
use crate::task::{ActionId, GroundTask, Plan, State, TaskError};

pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const DEFAULT_K_EXPECTED: usize = 16;
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no plan within the cost bound")]
    NoSolutionWithinBound { expanded: usize },
    #[error("expansion budget exhausted after {} solutions", .stream.solutions.len())]
    ResourceLimit { stream: SolutionStream },
    #[error("more than {cap} plans within the bound")]
    EnumerationCapExceeded { cap: usize },
    #[error("the expected plan set is empty")]
    EmptyExpectedSet,
    #[error(transparent)]
    Expected(#[from] ExpectedError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Expected plans prepared for comparison with robot plans and prefixes.
#[derive(Debug, Clone)]
pub struct ExpectedPrefixIndex {
    profiles: Vec<PlanProfile>,
    config: DistanceConfig,
}

impl ExpectedPrefixIndex {
    pub fn new(human_task: &GroundTask, set: &ExpectedPlanSet, config: DistanceConfig) -> Result<Self, SearchError> {
        if set.is_empty() {
            return Err(SearchError::EmptyExpectedSet);
        }
        Ok(ExpectedPrefixIndex { profiles: expected_profiles(human_task, set, &config)?, config })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn config(&self) -> &DistanceConfig {
        &self.config
    }

    /// Distance vector of a prefix against the closest truncated expected
    /// plan.
    pub fn prefix_features(&self, prefix: &PlanProfile) -> DistanceVector {
        select_closest(prefix.view(), &self.profiles, true, self.config.composite).expect("index is nonempty").features
    }

    /// Distance vector of a complete plan against the closest expected plan.
    pub fn plan_features(&self, plan: &PlanProfile) -> DistanceVector {
        select_closest(plan.view(), &self.profiles, false, self.config.composite).expect("index is nonempty").features
    }
}

/// Predicted explicability of a robot plan prefix; 1 for the empty prefix.
pub fn prefix_heuristic(
    robot_task: &GroundTask,
    prefix: &[ActionId],
    index: &ExpectedPrefixIndex,
    model: &RegressionModel,
    mapping: &ActionMapping,
) -> Result<f64, SearchError> {
    if prefix.is_empty() {
        return Ok(1.0);
    }
    let profile = robot_profile(robot_task, prefix, mapping, index)?;
    Ok(model.predict(&index.prefix_features(&profile)))
}

/// Predicted explicability of a complete robot plan.
pub fn plan_score(
    robot_task: &GroundTask,
    plan: &[ActionId],
    index: &ExpectedPrefixIndex,
    model: &RegressionModel,
    mapping: &ActionMapping,
) -> Result<f64, SearchError> {
    let profile = robot_profile(robot_task, plan, mapping, index)?;
    Ok(model.predict(&index.plan_features(&profile)))
}

fn robot_profile(
    task: &GroundTask,
    actions: &[ActionId],
    mapping: &ActionMapping,
    index: &ExpectedPrefixIndex,
) -> Result<PlanProfile, TaskError> {
    PlanProfile::build(task, actions, |n| mapping.translate(n, Direction::RobotToHuman).to_string(), index.config.link_mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Position in emission order.
    pub index: usize,
    pub plan: Plan,
    pub cost: u64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolutionStream {
    pub solutions: Vec<Solution>,
    /// Index of the first solution with the highest score so far.
    pub best: Option<usize>,
    pub expanded: usize,
    /// The open list ran empty (as opposed to the budget running out).
    pub exhausted: bool,
}

impl SolutionStream {
    pub fn best(&self) -> Option<&Solution> {
        self.best.map(|i| &self.solutions[i])
    }

    /// Best score after each emission.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.solutions
            .iter()
            .map(|s| {
                best = best.max(s.score);
                best
            })
            .collect()
    }

    fn push(&mut self, plan: Plan, score: f64) -> &Solution {
        let index = self.solutions.len();
        if self.best().is_none_or(|b| score > b.score) {
            self.best = Some(index);
        }
        self.solutions.push(Solution { index, cost: plan.cost, plan, score });
        &self.solutions[index]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub budget: usize,
    pub k_expected: usize,
    pub distance: DistanceConfig,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: DEFAULT_BUDGET, k_expected: DEFAULT_K_EXPECTED, distance: DistanceConfig::default() }
    }
}

struct Node {
    state: State,
    parent: Option<usize>,
    action: Option<ActionId>,
    g: u64,
}

/// Open-list entry: lower tier first, then higher `h`, then earlier insertion.
struct Entry {
    tier: u8,
    h: f64,
    seq: usize,
    node: usize,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.tier.cmp(&self.tier).then(self.h.total_cmp(&other.h)).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

fn path_of(nodes: &[Node], mut id: usize) -> Vec<ActionId> {
    let mut actions = Vec::new();
    while let Some(a) = nodes[id].action {
        actions.push(a);
        id = nodes[id].parent.expect("non-root nodes have parents");
    }
    actions.reverse();
    actions
}

fn on_path(nodes: &[Node], mut id: usize, state: &State) -> bool {
    loop {
        if &nodes[id].state == state {
            return true;
        }
        match nodes[id].parent {
            Some(p) => id = p,
            None => return false,
        }
    }
}

/// Generates the expected set from the human model and runs
/// [`reconciliation_search_with_index`].
pub fn reconciliation_search(
    epp: &ExplicablePlanningProblem,
    max_cost: u64,
    model: &RegressionModel,
    options: &SearchOptions,
    emit: &mut dyn FnMut(&Solution),
) -> Result<SolutionStream, SearchError> {
    let set = generate_expected_set(&epp.human, options.k_expected)?;
    let index = ExpectedPrefixIndex::new(&epp.human, &set, options.distance)?;
    reconciliation_search_with_index(&epp.robot, &epp.mapping, &index, max_cost, model, options.budget, emit)
}

/// Greedy best-first search on the prefix heuristic with cost bound
/// `max_cost`. Every loopless goal-reaching plan within the bound is
/// eventually emitted, scored on the full plan, in discovery order.
///
/// A closed state is reopened (queued normally) when a new prefix reaches
/// it with a strictly higher heuristic than it had when it was expanded.
/// Other prefixes reaching a closed state are not dropped but deferred
/// behind every normally queued node.
pub fn reconciliation_search_with_index(
    robot: &GroundTask,
    mapping: &ActionMapping,
    index: &ExpectedPrefixIndex,
    max_cost: u64,
    model: &RegressionModel,
    budget: usize,
    emit: &mut dyn FnMut(&Solution),
) -> Result<SolutionStream, SearchError> {
    let mut stream = SolutionStream::default();
    let mut nodes = vec![Node { state: robot.initial_state(), parent: None, action: None, g: 0 }];
    let mut open = BinaryHeap::from([Entry { tier: 0, h: 1.0, seq: 0, node: 0 }]);
    let mut seq = 1;
    let mut closed: HashMap<State, f64> = HashMap::new();
    let hmax = HMax::new(robot);

    while let Some(entry) = open.pop() {
        let id = entry.node;
        if robot.is_goal(&nodes[id].state) {
            let actions = path_of(&nodes, id);
            let score = plan_score(robot, &actions, index, model, mapping)?;
            let plan = Plan { actions, cost: nodes[id].g };
            emit(stream.push(plan, score));
            continue;
        }
        if stream.expanded >= budget {
            stream.exhausted = false;
            return Err(SearchError::ResourceLimit { stream });
        }
        stream.expanded += 1;
        let recorded = closed.entry(nodes[id].state.clone()).or_insert(entry.h);
        *recorded = recorded.max(entry.h);
        let prefix = path_of(&nodes, id);
        let g = nodes[id].g;
        let successors: Vec<(ActionId, State)> = robot.successors(&nodes[id].state).collect();
        for (a, next) in successors {
            let g2 = g + robot.actions()[a].cost;
            // h_max is admissible, so this cut never loses a plan within the bound
            if g2 > max_cost || hmax.value(&next).is_none_or(|h| g2 + h > max_cost) || on_path(&nodes, id, &next) {
                continue;
            }
            let mut child_prefix = prefix.clone();
            child_prefix.push(a);
            let h = prefix_heuristic(robot, &child_prefix, index, model, mapping)?;
            let tier = match closed.get(&next) {
                Some(&h_closed) if h <= h_closed => 1,
                _ => 0,
            };
            nodes.push(Node { state: next, parent: Some(id), action: Some(a), g: g2 });
            open.push(Entry { tier, h, seq, node: nodes.len() - 1 });
            seq += 1;
        }
    }
    stream.exhausted = true;
    if stream.solutions.is_empty() {
        return Err(SearchError::NoSolutionWithinBound { expanded: stream.expanded });
    }
    Ok(stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub best: Plan,
    pub score: f64,
    /// Every loopless plan within the bound with its score, in
    /// lexicographic action-id order.
    pub plans: Vec<(Plan, f64)>,
}

/// Scores every loopless plan with cost at most `max_cost`; the highest
/// score wins, ties going to the lexicographically smallest action-id
/// sequence.
pub fn brute_force_explicable(
    robot: &GroundTask,
    mapping: &ActionMapping,
    index: &ExpectedPrefixIndex,
    max_cost: u64,
    model: &RegressionModel,
    cap: usize,
) -> Result<BruteForceResult, SearchError> {
    let mut plans = Vec::new();
    let mut failure: Option<SearchError> = None;
    enumerate_loopless(robot, max_cost, usize::MAX, |actions, cost| {
        if plans.len() == cap {
            failure = Some(SearchError::EnumerationCapExceeded { cap });
            return ControlFlow::Break(());
        }
        match plan_score(robot, actions, index, model, mapping) {
            Ok(score) => {
                plans.push((Plan { actions: actions.to_vec(), cost }, score));
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut best: Option<&(Plan, f64)> = None;
    for p in &plans {
        if best.is_none_or(|b| p.1 > b.1) {
            best = Some(p);
        }
    }
    let (best, score) = best.cloned().ok_or(SearchError::NoSolutionWithinBound { expanded: 0 })?;
    Ok(BruteForceResult { best, score, plans })
}
