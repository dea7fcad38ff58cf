//! Cost-optimal planning with A* and h_max, and bounded enumeration of
//! loopless plans.
//!
//! A plan is loopless when its state trace never revisits a state. Goal
//! states end a path: enumeration reports the plan and does not extend it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::ops::ControlFlow;

use thiserror::Error;

use crate::task::{ActionId, GroundTask, Plan, State};

pub const DEFAULT_MAX_EXPANSIONS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("the task has no solution")]
    Unsolvable,
    #[error("search stopped after {expanded} expansions")]
    ResourceLimit { expanded: usize },
}

/// The h_max relaxation: cost of the most expensive goal atom, where an
/// atom costs the cheapest achiever's cost plus its most expensive
/// precondition. `None` means a goal atom is unreachable.
#[derive(Debug, Clone)]
pub struct HMax<'a> {
    task: &'a GroundTask,
    consumers: Vec<Vec<ActionId>>,
}

impl<'a> HMax<'a> {
    pub fn new(task: &'a GroundTask) -> Self {
        let mut consumers = vec![Vec::new(); task.num_fluents()];
        for a in task.actions() {
            for &p in &a.pre {
                consumers[p].push(a.id);
            }
        }
        HMax { task, consumers }
    }

    pub fn value(&self, state: &State) -> Option<u64> {
        let actions = self.task.actions();
        let mut cost = vec![u64::MAX; self.task.num_fluents()];
        let mut remaining: Vec<usize> = actions.iter().map(|a| a.pre.len()).collect();
        let mut support = vec![0u64; actions.len()];
        let mut heap = BinaryHeap::new();
        for f in state.ids() {
            cost[f] = 0;
            heap.push(Reverse((0u64, f)));
        }
        let relax = |a: ActionId, base: u64, cost: &mut Vec<u64>, heap: &mut BinaryHeap<Reverse<(u64, usize)>>| {
            let c = base + actions[a].cost;
            for &q in &actions[a].add {
                if c < cost[q] {
                    cost[q] = c;
                    heap.push(Reverse((c, q)));
                }
            }
        };
        for a in actions.iter().filter(|a| a.pre.is_empty()) {
            relax(a.id, 0, &mut cost, &mut heap);
        }
        let mut goals_left = self.task.goal().len();
        let mut goal_flag = vec![false; self.task.num_fluents()];
        for &g in self.task.goal() {
            goal_flag[g] = true;
        }
        let mut h = 0;
        while let Some(Reverse((c, f))) = heap.pop() {
            if c > cost[f] {
                continue;
            }
            if goal_flag[f] {
                goal_flag[f] = false;
                h = h.max(c);
                goals_left -= 1;
                if goals_left == 0 {
                    return Some(h);
                }
            }
            for &a in &self.consumers[f] {
                support[a] = support[a].max(c);
                remaining[a] -= 1;
                if remaining[a] == 0 {
                    relax(a, support[a], &mut cost, &mut heap);
                }
            }
        }
        (goals_left == 0).then_some(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    #[default]
    HMax,
    /// Uniform-cost search.
    Blind,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannerOptions {
    pub heuristic: Heuristic,
    pub max_expansions: usize,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        PlannerOptions { heuristic: Heuristic::HMax, max_expansions: DEFAULT_MAX_EXPANSIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanResult {
    pub plan: Plan,
    pub expanded: usize,
}

pub fn optimal_plan(task: &GroundTask) -> Result<Plan, PlanError> {
    optimal_plan_with(task, &PlannerOptions::default()).map(|r| r.plan)
}

/// A* on `g + h`. Among equal `f`, nodes are expanded in insertion order, and
/// successors are inserted in action-id order.
pub fn optimal_plan_with(task: &GroundTask, options: &PlannerOptions) -> Result<PlanResult, PlanError> {
    let hmax = HMax::new(task);
    let h = |s: &State| match options.heuristic {
        Heuristic::HMax => hmax.value(s),
        Heuristic::Blind => Some(0),
    };

    struct Node {
        state: State,
        parent: Option<(usize, ActionId)>,
        g: u64,
    }
    let init = task.initial_state();
    let Some(h0) = h(&init) else {
        return Err(PlanError::Unsolvable);
    };
    let mut nodes = vec![Node { state: init.clone(), parent: None, g: 0 }];
    let mut best_g: HashMap<State, u64> = HashMap::from([(init, 0)]);
    let mut open = BinaryHeap::from([Reverse((h0, 0usize))]);
    let mut expanded = 0;

    while let Some(Reverse((_, id))) = open.pop() {
        let g = nodes[id].g;
        if best_g.get(&nodes[id].state).is_some_and(|&b| b < g) {
            continue;
        }
        if task.is_goal(&nodes[id].state) {
            let mut actions = Vec::new();
            let mut cur = id;
            while let Some((parent, a)) = nodes[cur].parent {
                actions.push(a);
                cur = parent;
            }
            actions.reverse();
            return Ok(PlanResult { plan: Plan { actions, cost: g }, expanded });
        }
        if expanded >= options.max_expansions {
            return Err(PlanError::ResourceLimit { expanded });
        }
        expanded += 1;
        let succ: Vec<(ActionId, State)> = task.successors(&nodes[id].state).collect();
        for (a, next) in succ {
            let g2 = g + task.actions()[a].cost;
            if best_g.get(&next).is_some_and(|&b| b <= g2) {
                continue;
            }
            let Some(hv) = h(&next) else { continue };
            best_g.insert(next.clone(), g2);
            nodes.push(Node { state: next, parent: Some((id, a)), g: g2 });
            open.push(Reverse((g2 + hv, nodes.len() - 1)));
        }
    }
    Err(PlanError::Unsolvable)
}

/// Outcome of [`enumerate_loopless`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationStats {
    pub expanded: usize,
    /// The visitor asked to stop.
    pub stopped: bool,
}

/// Depth-first enumeration, in lexicographic action-id order, of every
/// loopless plan with cost at most `bound`. Branches are cut when
/// `g + h_max > bound`. Each plan is passed to `visit` with its cost.
pub fn enumerate_loopless(
    task: &GroundTask,
    bound: u64,
    max_expansions: usize,
    mut visit: impl FnMut(&[ActionId], u64) -> ControlFlow<()>,
) -> Result<EnumerationStats, PlanError> {
    let hmax = HMax::new(task);
    let init = task.initial_state();
    let mut stats = EnumerationStats { expanded: 0, stopped: false };
    if hmax.value(&init).is_none_or(|h| h > bound) {
        return Ok(stats);
    }
    let mut on_path: HashSet<State> = HashSet::from([init.clone()]);
    let mut path: Vec<ActionId> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();

    let mut push = |state: State,
                    g: u64,
                    path: &[ActionId],
                    stack: &mut Vec<Frame>,
                    stats: &mut EnumerationStats|
     -> Result<bool, PlanError> {
        if task.is_goal(&state) {
            if visit(path, g).is_break() {
                stats.stopped = true;
                return Ok(false);
            }
            stack.push(Frame { state, g, pending: Vec::new() });
            return Ok(true);
        }
        if stats.expanded >= max_expansions {
            return Err(PlanError::ResourceLimit { expanded: stats.expanded });
        }
        stats.expanded += 1;
        let mut pending: Vec<(ActionId, State)> = task
            .successors(&state)
            .filter(|(a, next)| {
                let g2 = g + task.actions()[*a].cost;
                g2 <= bound && hmax.value(next).is_some_and(|h| g2 + h <= bound)
            })
            .collect();
        pending.reverse();
        stack.push(Frame { state, g, pending });
        Ok(true)
    };

    if !push(init, 0, &path, &mut stack, &mut stats)? {
        return Ok(stats);
    }
    while let Some(frame) = stack.last_mut() {
        let g = frame.g;
        match frame.pending.pop() {
            Some((a, next)) => {
                if on_path.contains(&next) {
                    continue;
                }
                path.push(a);
                on_path.insert(next.clone());
                if !push(next, g + task.actions()[a].cost, &path, &mut stack, &mut stats)? {
                    return Ok(stats);
                }
            }
            None => {
                let done = stack.pop().expect("stack is nonempty");
                if path.pop().is_some() {
                    on_path.remove(&done.state);
                }
            }
        }
    }
    Ok(stats)
}

struct Frame {
    state: State,
    g: u64,
    /// Successors still to visit, last one first.
    pending: Vec<(ActionId, State)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::tests::toy;

    #[test]
    fn hmax_on_toy() {
        let t = toy();
        // r needs finish (3) after q, q needs swap (2)
        assert_eq!(HMax::new(&t).value(&t.initial_state()), Some(5));
        let goal = State::from_ids(t.num_fluents(), [2]);
        assert_eq!(HMax::new(&t).value(&goal), Some(0));
        assert_eq!(HMax::new(&t).value(&State::empty(t.num_fluents())), None);
    }

    #[test]
    fn astar_on_toy() {
        let t = toy();
        let p = optimal_plan(&t).unwrap();
        assert_eq!(p.actions, vec![1, 2]);
        assert_eq!(p.cost, 5);
        let blind = optimal_plan_with(&t, &PlannerOptions { heuristic: Heuristic::Blind, ..Default::default() }).unwrap();
        assert_eq!(blind.plan.cost, 5);
        let limited = optimal_plan_with(&t, &PlannerOptions { max_expansions: 0, ..Default::default() });
        assert_eq!(limited, Err(PlanError::ResourceLimit { expanded: 0 }));
    }

    #[test]
    fn enumerates_loopless_plans_in_order() {
        let t = toy();
        let mut plans = Vec::new();
        enumerate_loopless(&t, 100, usize::MAX, |p, c| {
            plans.push((p.to_vec(), c));
            ControlFlow::Continue(())
        })
        .unwrap();
        // noop never changes the state, so it can never appear
        assert_eq!(plans, vec![(vec![1, 2], 5)]);
        let mut none = 0;
        enumerate_loopless(&t, 4, usize::MAX, |_, _| {
            none += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(none, 0);
    }
}
