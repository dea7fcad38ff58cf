//! Grounded STRIPS tasks: states, transition, plan validation and cost.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type FluentId = usize;
pub type ActionId = usize;

pub const GROUND_TASK_FORMAT: &str = "explicable-ground-task";
pub const GROUND_TASK_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("action {action} is not applicable; missing {}", missing.join(", "))]
    PreconditionViolation { action: String, missing: Vec<String> },
    #[error("plan step {index} ({action}) is not applicable; missing {}", missing.join(", "))]
    StepFailure { index: usize, action: String, missing: Vec<String> },
    #[error("goal not satisfied; missing {}", missing.join(", "))]
    GoalUnsatisfied { missing: Vec<String> },
    #[error("unknown action id {0}")]
    UnknownAction(ActionId),
    #[error("unknown action `{0}`")]
    UnknownActionName(String),
    #[error("fluent `{0}` is not part of the target universe")]
    UnknownFluent(String),
    #[error("malformed ground task: {0}")]
    Malformed(String),
}

/// A set of fluent ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(FixedBitSet);

impl State {
    pub fn empty(universe: usize) -> Self {
        State(FixedBitSet::with_capacity(universe))
    }

    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = FluentId>) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe);
        for id in ids {
            bits.insert(id);
        }
        State(bits)
    }

    pub fn contains(&self, id: FluentId) -> bool {
        self.0.contains(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.0.ones()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_superset_of(&self, ids: &[FluentId]) -> bool {
        ids.iter().all(|&f| self.0.contains(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fluent {
    pub name: String,
    /// True for the complement fluents introduced when compiling away
    /// negative preconditions.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub derived: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundAction {
    pub id: ActionId,
    pub name: String,
    pub schema: String,
    pub args: Vec<String>,
    pub pre: Vec<FluentId>,
    pub add: Vec<FluentId>,
    pub del: Vec<FluentId>,
    pub cost: u64,
}

impl GroundAction {
    /// `(schema arg1 arg2)`, the plan-file spelling.
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

/// Display name of a ground action: schema and arguments joined by `-`.
pub fn ground_action_name(schema: &str, args: &[String]) -> String {
    let mut s = schema.to_string();
    for a in args {
        s.push('-');
        s.push_str(a);
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroundTaskFile {
    format: String,
    version: u32,
    name: String,
    fluents: Vec<IndexedFluent>,
    actions: Vec<GroundAction>,
    init: Vec<FluentId>,
    goal: Vec<FluentId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexedFluent {
    id: FluentId,
    #[serde(flatten)]
    fluent: Fluent,
}

#[derive(Debug, Clone)]
pub struct GroundTask {
    name: String,
    fluents: Vec<Fluent>,
    actions: Vec<GroundAction>,
    init: Vec<FluentId>,
    goal: Vec<FluentId>,
    fluent_index: HashMap<String, FluentId>,
    action_index: HashMap<String, ActionId>,
}

impl PartialEq for GroundTask {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.fluents == other.fluents
            && self.actions == other.actions
            && self.init == other.init
            && self.goal == other.goal
    }
}

impl GroundTask {
    /// Builds a task, checking that ids are dense and in range.
    pub fn new(
        name: impl Into<String>,
        fluents: Vec<Fluent>,
        mut actions: Vec<GroundAction>,
        mut init: Vec<FluentId>,
        mut goal: Vec<FluentId>,
    ) -> Result<Self, TaskError> {
        let n = fluents.len();
        let check = |ids: &[FluentId], what: &str| -> Result<(), TaskError> {
            match ids.iter().find(|&&f| f >= n) {
                Some(f) => Err(TaskError::Malformed(format!("{what} references fluent {f} outside 0..{n}"))),
                None => Ok(()),
            }
        };
        for (i, a) in actions.iter_mut().enumerate() {
            if a.id != i {
                return Err(TaskError::Malformed(format!("action `{}` has id {} at position {i}", a.name, a.id)));
            }
            check(&a.pre, &a.name)?;
            check(&a.add, &a.name)?;
            check(&a.del, &a.name)?;
            for v in [&mut a.pre, &mut a.add, &mut a.del] {
                v.sort_unstable();
                v.dedup();
            }
        }
        check(&init, "init")?;
        check(&goal, "goal")?;
        init.sort_unstable();
        init.dedup();
        goal.sort_unstable();
        goal.dedup();

        let mut fluent_index = HashMap::with_capacity(n);
        for (i, f) in fluents.iter().enumerate() {
            if fluent_index.insert(f.name.clone(), i).is_some() {
                return Err(TaskError::Malformed(format!("duplicate fluent `{}`", f.name)));
            }
        }
        let mut action_index = HashMap::with_capacity(actions.len());
        for a in &actions {
            if action_index.insert(a.name.clone(), a.id).is_some() {
                return Err(TaskError::Malformed(format!("duplicate action name `{}`", a.name)));
            }
        }
        Ok(GroundTask { name: name.into(), fluents, actions, init, goal, fluent_index, action_index })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fluents(&self) -> &[Fluent] {
        &self.fluents
    }

    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn fluent_name(&self, id: FluentId) -> &str {
        &self.fluents[id].name
    }

    pub fn fluent_id(&self, name: &str) -> Option<FluentId> {
        self.fluent_index.get(name).copied()
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> Result<&GroundAction, TaskError> {
        self.actions.get(id).ok_or(TaskError::UnknownAction(id))
    }

    pub fn action_by_name(&self, name: &str) -> Option<&GroundAction> {
        self.action_index.get(name).map(|&id| &self.actions[id])
    }

    pub fn find_action(&self, schema: &str, args: &[String]) -> Option<&GroundAction> {
        self.action_by_name(&ground_action_name(schema, args))
            .filter(|a| a.schema == schema && a.args == args)
            .or_else(|| self.actions.iter().find(|a| a.schema == schema && a.args == args))
    }

    pub fn init(&self) -> &[FluentId] {
        &self.init
    }

    pub fn goal(&self) -> &[FluentId] {
        &self.goal
    }

    pub fn initial_state(&self) -> State {
        State::from_ids(self.fluents.len(), self.init.iter().copied())
    }

    pub fn is_goal(&self, state: &State) -> bool {
        state.is_superset_of(&self.goal)
    }

    pub fn is_applicable(&self, state: &State, action: ActionId) -> bool {
        self.actions.get(action).is_some_and(|a| state.is_superset_of(&a.pre))
    }

    /// `(state \ del(a)) ∪ add(a)`, after checking `pre(a) ⊆ state`.
    pub fn apply(&self, state: &State, action: ActionId) -> Result<State, TaskError> {
        let a = self.action(action)?;
        let missing: Vec<String> =
            a.pre.iter().filter(|&&f| !state.contains(f)).map(|&f| self.fluents[f].name.clone()).collect();
        if !missing.is_empty() {
            return Err(TaskError::PreconditionViolation { action: a.name.clone(), missing });
        }
        Ok(self.apply_unchecked(state, a))
    }

    pub(crate) fn apply_unchecked(&self, state: &State, a: &GroundAction) -> State {
        let mut next = state.0.clone();
        for &f in &a.del {
            next.set(f, false);
        }
        for &f in &a.add {
            next.insert(f);
        }
        State(next)
    }

    /// Applicable actions and their successor states, in action-id order.
    pub fn successors<'a>(&'a self, state: &'a State) -> impl Iterator<Item = (ActionId, State)> + 'a {
        self.actions
            .iter()
            .filter(move |a| state.is_superset_of(&a.pre))
            .map(move |a| (a.id, self.apply_unchecked(state, a)))
    }

    /// Names of the fluents true in `state`, optionally without the derived
    /// complement fluents. Sorted.
    pub fn state_names(&self, state: &State, include_derived: bool) -> Vec<String> {
        let mut names: Vec<String> = state
            .ids()
            .filter(|&f| include_derived || !self.fluents[f].derived)
            .map(|f| self.fluents[f].name.clone())
            .collect();
        names.sort();
        names
    }

    pub fn plan_cost(&self, actions: &[ActionId]) -> Result<u64, TaskError> {
        actions.iter().try_fold(0u64, |acc, &a| Ok(acc + self.action(a)?.cost))
    }

    /// Runs `plan` from the initial state, returning the trace when every
    /// step is applicable and the final state satisfies the goal.
    pub fn validate_plan(&self, plan: &Plan) -> Result<StateTrace, TaskError> {
        let trace = self.execute(&plan.actions)?;
        let last = trace.last();
        let missing: Vec<String> =
            self.goal.iter().filter(|&&g| !last.contains(g)).map(|&g| self.fluents[g].name.clone()).collect();
        if !missing.is_empty() {
            return Err(TaskError::GoalUnsatisfied { missing });
        }
        Ok(trace)
    }

    /// Executes a (possibly partial) action sequence, without a goal check.
    pub fn execute(&self, actions: &[ActionId]) -> Result<StateTrace, TaskError> {
        let mut states = Vec::with_capacity(actions.len() + 1);
        states.push(self.initial_state());
        for (index, &id) in actions.iter().enumerate() {
            let current = states.last().expect("trace starts with the initial state");
            let next = self.apply(current, id).map_err(|e| match e {
                TaskError::PreconditionViolation { action, missing } => TaskError::StepFailure { index, action, missing },
                other => other,
            })?;
            states.push(next);
        }
        Ok(StateTrace { states })
    }

    /// Re-indexes the task over a larger fluent universe (given by name),
    /// keeping everything else unchanged.
    pub fn reindexed(&self, universe: &[Fluent]) -> Result<GroundTask, TaskError> {
        let index: HashMap<&str, FluentId> = universe.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
        let remap = |ids: &[FluentId]| -> Result<Vec<FluentId>, TaskError> {
            ids.iter()
                .map(|&f| {
                    let name = &self.fluents[f].name;
                    index.get(name.as_str()).copied().ok_or_else(|| TaskError::UnknownFluent(name.clone()))
                })
                .collect()
        };
        let actions = self
            .actions
            .iter()
            .map(|a| {
                Ok(GroundAction { pre: remap(&a.pre)?, add: remap(&a.add)?, del: remap(&a.del)?, ..a.clone() })
            })
            .collect::<Result<Vec<_>, TaskError>>()?;
        GroundTask::new(self.name.clone(), universe.to_vec(), actions, remap(&self.init)?, remap(&self.goal)?)
    }

    /// Versioned JSON with an explicit fluent-id table.
    pub fn to_json(&self) -> String {
        let file = GroundTaskFile {
            format: GROUND_TASK_FORMAT.to_string(),
            version: GROUND_TASK_VERSION,
            name: self.name.clone(),
            fluents: self
                .fluents
                .iter()
                .enumerate()
                .map(|(id, f)| IndexedFluent { id, fluent: f.clone() })
                .collect(),
            actions: self.actions.clone(),
            init: self.init.clone(),
            goal: self.goal.clone(),
        };
        serde_json::to_string_pretty(&file).expect("ground task serializes")
    }

    pub fn from_json(text: &str) -> Result<GroundTask, TaskError> {
        let file: GroundTaskFile = serde_json::from_str(text).map_err(|e| TaskError::Malformed(e.to_string()))?;
        if file.format != GROUND_TASK_FORMAT || file.version != GROUND_TASK_VERSION {
            return Err(TaskError::Malformed(format!("unsupported format {} v{}", file.format, file.version)));
        }
        for (i, f) in file.fluents.iter().enumerate() {
            if f.id != i {
                return Err(TaskError::Malformed(format!("fluent ids must be dense; found {} at {i}", f.id)));
            }
        }
        GroundTask::new(file.name, file.fluents.into_iter().map(|f| f.fluent).collect(), file.actions, file.init, file.goal)
    }
}

/// An action sequence with its total cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<ActionId>,
    pub cost: u64,
}

impl Plan {
    pub fn empty() -> Self {
        Plan { actions: Vec::new(), cost: 0 }
    }

    pub fn new(task: &GroundTask, actions: Vec<ActionId>) -> Result<Self, TaskError> {
        let cost = task.plan_cost(&actions)?;
        Ok(Plan { actions, cost })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn names<'a>(&'a self, task: &'a GroundTask) -> impl Iterator<Item = &'a str> + 'a {
        self.actions.iter().map(move |&a| task.actions[a].name.as_str())
    }
}

/// States visited by a plan; `states[0]` is the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTrace {
    pub states: Vec<State>,
}

impl StateTrace {
    pub fn last(&self) -> &State {
        self.states.last().expect("a trace is never empty")
    }

    /// Number of actions that produced this trace.
    pub fn plan_len(&self) -> usize {
        self.states.len() - 1
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (cost {})", self.actions, self.cost)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Fluents p, q; actions: 0 noop, 1 p->q (del p), 2 needs q.
    pub(crate) fn toy() -> GroundTask {
        let fl = |n: &str| Fluent { name: n.into(), derived: false };
        let act = |id, name: &str, pre: Vec<usize>, add: Vec<usize>, del: Vec<usize>, cost| GroundAction {
            id,
            name: name.into(),
            schema: name.into(),
            args: vec![],
            pre,
            add,
            del,
            cost,
        };
        GroundTask::new(
            "toy",
            vec![fl("(p)"), fl("(q)"), fl("(r)")],
            vec![
                act(0, "noop", vec![], vec![], vec![], 1),
                act(1, "swap", vec![0], vec![1], vec![0], 2),
                act(2, "finish", vec![1], vec![2], vec![], 3),
            ],
            vec![0],
            vec![2],
        )
        .unwrap()
    }

    #[test]
    fn apply_identity_and_definition() {
        let t = toy();
        let s = t.initial_state();
        assert_eq!(t.apply(&s, 0).unwrap(), s);
        let s2 = t.apply(&s, 1).unwrap();
        assert_eq!(s2.ids().collect::<Vec<_>>(), vec![1]);
        assert!(matches!(
            t.apply(&s, 2),
            Err(TaskError::PreconditionViolation { missing, .. }) if missing == vec!["(q)".to_string()]
        ));
    }

    #[test]
    fn validation_reports_step_and_goal() {
        let t = toy();
        let ok = Plan::new(&t, vec![1, 2]).unwrap();
        assert_eq!(ok.cost, 5);
        let trace = t.validate_plan(&ok).unwrap();
        assert_eq!(trace.states.len(), 3);
        let swapped = Plan::new(&t, vec![2, 1]).unwrap();
        assert!(matches!(t.validate_plan(&swapped), Err(TaskError::StepFailure { index: 0, .. })));
        let short = Plan::new(&t, vec![1]).unwrap();
        assert!(matches!(t.validate_plan(&short), Err(TaskError::GoalUnsatisfied { .. })));
    }

    #[test]
    fn empty_plan_when_goal_holds() {
        let mut t = toy();
        t.goal = vec![0];
        let trace = t.validate_plan(&Plan::empty()).unwrap();
        assert_eq!(trace.states.len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let t = toy();
        let text = t.to_json();
        let back = GroundTask::from_json(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_out_of_range_ids() {
        let bad = GroundTask::new("x", vec![], vec![], vec![3], vec![]);
        assert!(matches!(bad, Err(TaskError::Malformed(_))));
    }
}
