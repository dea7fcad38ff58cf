//! Plan distance measures: action-set, causal-link and state-sequence
//! distances, and the composite distance used to pick the closest expected
//! plan.
//!
//! All set distances are Jaccard complements, `1 - |A ∩ B| / |A ∪ B|`, with
//! two empty sets at distance 0. Plans are compared in the human model's
//! action vocabulary: robot action names are translated through the
//! [`ActionMapping`] before any comparison.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::mapping::{ActionMapping, Direction};
use crate::task::{ActionId, FluentId, GroundTask, Plan, TaskError};

/// How causal links are read off a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMode {
    /// Only between consecutive actions `a_i`, `a_{i+1}`.
    #[default]
    LiteralAdjacent,
    /// Any `a_i` before `a_j` where no action in between deletes or re-adds
    /// the fluent.
    ProducerConsumer,
}

impl std::str::FromStr for LinkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal-adjacent" => Ok(LinkMode::LiteralAdjacent),
            "producer-consumer" => Ok(LinkMode::ProducerConsumer),
            other => Err(format!("unknown link mode `{other}`")),
        }
    }
}

/// Scalarisation of a [`DistanceVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositeKind {
    /// `(δ_A + δ_C + δ_S)^2`
    #[default]
    SquaredSum,
    /// `δ_A^2 + δ_C^2 + δ_S^2`
    SquaredNorm,
}

impl std::str::FromStr for CompositeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared-sum" => Ok(CompositeKind::SquaredSum),
            "squared-norm" => Ok(CompositeKind::SquaredNorm),
            other => Err(format!("unknown composite kind `{other}`")),
        }
    }
}

/// Settings shared by every distance computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub link_mode: LinkMode,
    pub composite: CompositeKind,
}

/// A producer action, the fluent it supplies and the consumer action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CausalLink {
    pub producer: ActionId,
    pub fluent: FluentId,
    pub consumer: ActionId,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceVector {
    pub action: f64,
    pub causal: f64,
    pub state: f64,
}

impl DistanceVector {
    pub const ZERO: DistanceVector = DistanceVector { action: 0.0, causal: 0.0, state: 0.0 };

    pub fn new(action: f64, causal: f64, state: f64) -> Self {
        DistanceVector { action, causal, state }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.action, self.causal, self.state]
    }

    pub fn sum(&self) -> f64 {
        self.action + self.causal + self.state
    }
}

impl From<[f64; 3]> for DistanceVector {
    fn from(v: [f64; 3]) -> Self {
        DistanceVector::new(v[0], v[1], v[2])
    }
}

pub fn composite_distance(dv: &DistanceVector, kind: CompositeKind) -> f64 {
    match kind {
        CompositeKind::SquaredSum => dv.sum().powi(2),
        CompositeKind::SquaredNorm => dv.action.powi(2) + dv.causal.powi(2) + dv.state.powi(2),
    }
}

pub fn jaccard_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Jaccard distance between two sorted, duplicate-free name lists.
fn sorted_jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].as_ref().cmp(b[j].as_ref()) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Distance between two states given as fluent-name sets.
pub fn state_distance<S: AsRef<str> + Ord>(s1: &BTreeSet<S>, s2: &BTreeSet<S>) -> f64 {
    let a: Vec<&str> = s1.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = s2.iter().map(AsRef::as_ref).collect();
    sorted_jaccard(&a, &b)
}

/// State-sequence distance over the post-action states of two plans
/// (`seq[k]` is the state after step `k + 1`; initial states are excluded).
/// With `n` the longer and `n'` the shorter length, the unmatched suffix
/// counts as maximally distant: `(Σ_{k<n'} d(s_k, s'_k) + n - n') / n`.
/// Each state must be sorted and duplicate-free.
pub fn state_sequence_distance<S: AsRef<str>>(a: &[Vec<S>], b: &[Vec<S>]) -> f64 {
    let n = a.len().max(b.len());
    let n_short = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let paired: f64 = a.iter().zip(b).map(|(x, y)| sorted_jaccard(x, y)).sum();
    (paired + (n - n_short) as f64) / n as f64
}

/// Causal links of an executable action sequence. Every link records the
/// producing and consuming positions' action ids.
pub fn extract_causal_links(task: &GroundTask, plan: &Plan, mode: LinkMode) -> Result<BTreeSet<CausalLink>, TaskError> {
    task.execute(&plan.actions)?;
    Ok(positional_links(task, &plan.actions, mode)
        .into_iter()
        .map(|(i, fluent, j)| CausalLink { producer: plan.actions[i], fluent, consumer: plan.actions[j] })
        .collect())
}

/// Links as (producer position, fluent, consumer position), ordered by
/// consumer then producer.
fn positional_links(task: &GroundTask, actions: &[ActionId], mode: LinkMode) -> Vec<(usize, FluentId, usize)> {
    let acts = task.actions();
    let mut links = Vec::new();
    for (j, &consumer) in actions.iter().enumerate() {
        for &p in &acts[consumer].pre {
            match mode {
                LinkMode::LiteralAdjacent => {
                    if j > 0 && acts[actions[j - 1]].add.contains(&p) {
                        links.push((j - 1, p, j));
                    }
                }
                LinkMode::ProducerConsumer => {
                    // nearest earlier action touching p; it must be an adder
                    for i in (0..j).rev() {
                        let a = &acts[actions[i]];
                        if a.add.contains(&p) {
                            links.push((i, p, j));
                            break;
                        }
                        if a.del.contains(&p) {
                            break;
                        }
                    }
                }
            }
        }
    }
    links.sort_by_key(|&(i, f, j)| (j, i, f));
    links
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NamedLink {
    pub producer: String,
    pub fluent: String,
    pub consumer: String,
}

/// Everything the distance measures need from one plan, with action names
/// already in the comparison vocabulary. Complement fluents introduced for
/// negative preconditions are left out of states and links so that models
/// with and without negative preconditions compare on the same atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanProfile {
    actions: Vec<String>,
    states: Vec<Vec<String>>,
    /// (consumer position, link)
    links: Vec<(usize, NamedLink)>,
}

impl PlanProfile {
    /// Profile of a robot-model plan with names translated to the human
    /// vocabulary.
    pub fn robot(task: &GroundTask, plan: &Plan, mapping: &ActionMapping, mode: LinkMode) -> Result<Self, TaskError> {
        Self::build(task, &plan.actions, |n| mapping.translate(n, Direction::RobotToHuman).to_string(), mode)
    }

    /// Profile of a plan whose names are used as they are.
    pub fn plain(task: &GroundTask, plan: &Plan, mode: LinkMode) -> Result<Self, TaskError> {
        Self::build(task, &plan.actions, str::to_string, mode)
    }

    /// Builds a profile from an executable (not necessarily goal-reaching)
    /// action sequence.
    pub fn build(
        task: &GroundTask,
        actions: &[ActionId],
        rename: impl Fn(&str) -> String,
        mode: LinkMode,
    ) -> Result<Self, TaskError> {
        let trace = task.execute(actions)?;
        let names: Vec<String> = actions.iter().map(|&a| rename(&task.actions()[a].name)).collect();
        let states = trace.states[1..].iter().map(|s| task.state_names(s, false)).collect();
        let links = positional_links(task, actions, mode)
            .into_iter()
            .filter(|&(_, f, _)| !task.fluents()[f].derived)
            .map(|(i, f, j)| {
                (j, NamedLink { producer: names[i].clone(), fluent: task.fluent_name(f).to_string(), consumer: names[j].clone() })
            })
            .collect();
        Ok(PlanProfile { actions: names, states, links })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.actions
    }

    pub fn view(&self) -> ProfileView<'_> {
        ProfileView { profile: self, len: self.actions.len() }
    }

    /// The first `len` steps (clamped to the plan length).
    pub fn prefix(&self, len: usize) -> ProfileView<'_> {
        ProfileView { profile: self, len: len.min(self.actions.len()) }
    }
}

/// A prefix of a [`PlanProfile`].
#[derive(Debug, Clone, Copy)]
pub struct ProfileView<'a> {
    profile: &'a PlanProfile,
    len: usize,
}

impl<'a> ProfileView<'a> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn action_set(&self) -> BTreeSet<&'a str> {
        self.profile.actions[..self.len].iter().map(String::as_str).collect()
    }

    pub fn link_set(&self) -> BTreeSet<&'a NamedLink> {
        // a link lies inside the prefix iff its consumer does
        self.profile.links.iter().take_while(|(j, _)| *j < self.len).map(|(_, l)| l).collect()
    }

    pub fn states(&self) -> &'a [Vec<String>] {
        &self.profile.states[..self.len]
    }
}

pub fn action_distance(a: ProfileView<'_>, b: ProfileView<'_>) -> f64 {
    jaccard_distance(&a.action_set(), &b.action_set())
}

pub fn causal_link_distance(a: ProfileView<'_>, b: ProfileView<'_>) -> f64 {
    jaccard_distance(&a.link_set(), &b.link_set())
}

pub fn distance_vector(a: ProfileView<'_>, b: ProfileView<'_>) -> DistanceVector {
    DistanceVector {
        action: action_distance(a, b),
        causal: causal_link_distance(a, b),
        state: state_sequence_distance(a.states(), b.states()),
    }
}

/// All three distances between a robot-model plan and a human-model plan.
pub fn plan_distances(
    robot_task: &GroundTask,
    robot_plan: &Plan,
    human_task: &GroundTask,
    human_plan: &Plan,
    mapping: &ActionMapping,
    mode: LinkMode,
) -> Result<DistanceVector, TaskError> {
    let r = PlanProfile::robot(robot_task, robot_plan, mapping, mode)?;
    let h = PlanProfile::plain(human_task, human_plan, mode)?;
    Ok(distance_vector(r.view(), h.view()))
}
