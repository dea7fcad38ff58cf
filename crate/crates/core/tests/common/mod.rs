//! Fixture loading and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use explicable::ground::ground;
use explicable::mapping::{ActionMapping, Direction};
use explicable::pddl::{parse_domain, parse_problem};
use explicable::task::{ActionId, FluentId, GroundTask};
use explicable::ExplicablePlanningProblem;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read(rel: &str) -> String {
    let p = fixtures().join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn task(domain: &str, problem: &str) -> GroundTask {
    let d = parse_domain(&read(domain)).unwrap();
    let p = parse_problem(&read(problem), &d).unwrap();
    ground(&d, &p).unwrap()
}

/// Problem files (relative to the fixture root) in a fixture directory.
pub fn problems_in(dir: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(fixtures().join(dir))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".pddl"))
        .map(|n| format!("{dir}/{n}"))
        .collect();
    v.sort();
    v
}

/// Robot model, human model and (optional) mapping in `dir`.
pub fn epp(dir: &str, problem: &str) -> ExplicablePlanningProblem {
    let mapping = if fixtures().join(dir).join("mapping.tsv").exists() {
        ActionMapping::parse_tsv(&read(&format!("{dir}/mapping.tsv"))).unwrap()
    } else {
        ActionMapping::new()
    };
    ExplicablePlanningProblem::new(
        task(&format!("{dir}/robot.pddl"), problem),
        task(&format!("{dir}/human.pddl"), problem),
        mapping,
    )
    .unwrap()
}

/// Every planning problem of every fixture model, named `model:problem`.
pub fn all_tasks() -> Vec<(String, GroundTask)> {
    let mut out = Vec::new();
    for model in ["robot", "human"] {
        for dir in ["car/problems/test", "car/problems/train"] {
            for p in problems_in(dir) {
                out.push((format!("car-{model}:{p}"), task(&format!("car/{model}.pddl"), &p)));
            }
        }
        for p in problems_in("delivery/problems") {
            out.push((format!("delivery-{model}:{p}"), task(&format!("delivery/{model}.pddl"), &p)));
        }
        out.push((format!("witness-{model}"), task(&format!("toy/witness/{model}.pddl"), "toy/witness/problem.pddl")));
    }
    for p in ["chain", "diamond", "grid"] {
        out.push((format!("graph:{p}"), task("toy/graph/domain.pddl", &format!("toy/graph/{p}.pddl"))));
    }
    out
}

/// Every robot/human problem pair.
pub fn all_epps() -> Vec<(String, ExplicablePlanningProblem)> {
    let mut out = Vec::new();
    for p in problems_in("car/problems/test").into_iter().chain(problems_in("car/problems/train")) {
        out.push((p.clone(), epp("car", &p)));
    }
    for p in problems_in("delivery/problems") {
        out.push((p.clone(), epp("delivery", &p)));
    }
    out.push(("witness".into(), epp("toy/witness", "toy/witness/problem.pddl")));
    out
}

/// States as sorted fluent-id sets, applied step by step without the
/// library's executor.
pub fn oracle_trace(task: &GroundTask, actions: &[ActionId]) -> Option<Vec<BTreeSet<FluentId>>> {
    let mut s: BTreeSet<FluentId> = task.init().iter().copied().collect();
    let mut trace = vec![s.clone()];
    for &a in actions {
        let act = &task.actions()[a];
        if !act.pre.iter().all(|p| s.contains(p)) {
            return None;
        }
        for d in &act.del {
            s.remove(d);
        }
        s.extend(act.add.iter().copied());
        trace.push(s.clone());
    }
    Some(trace)
}

type Bits = Vec<u64>;

fn has(s: &Bits, f: FluentId) -> bool {
    s[f / 64] >> (f % 64) & 1 == 1
}

/// Every loopless goal-reaching action sequence with cost at most `bound`,
/// by plain recursive DFS. A goal state ends a path. `None` when more than
/// `cap` plans exist or more than `node_cap` nodes are visited.
pub fn oracle_loopless_plans(
    task: &GroundTask,
    bound: u64,
    cap: usize,
    node_cap: usize,
) -> Option<Vec<(Vec<ActionId>, u64)>> {
    struct Dfs<'a> {
        task: &'a GroundTask,
        bound: u64,
        cap: usize,
        node_cap: usize,
        nodes: usize,
        path: Vec<ActionId>,
        seen: std::collections::HashSet<Bits>,
        out: Vec<(Vec<ActionId>, u64)>,
    }
    impl Dfs<'_> {
        fn go(&mut self, s: Bits, g: u64) -> bool {
            self.nodes += 1;
            if self.nodes > self.node_cap || self.out.len() > self.cap {
                return false;
            }
            if self.task.goal().iter().all(|&f| has(&s, f)) {
                self.out.push((self.path.clone(), g));
                return true;
            }
            self.seen.insert(s.clone());
            for act in self.task.actions() {
                if g.saturating_add(act.cost) > self.bound || !act.pre.iter().all(|&p| has(&s, p)) {
                    continue;
                }
                let mut t = s.clone();
                for &d in &act.del {
                    t[d / 64] &= !(1 << (d % 64));
                }
                for &a in &act.add {
                    t[a / 64] |= 1 << (a % 64);
                }
                if self.seen.contains(&t) {
                    continue;
                }
                self.path.push(act.id);
                let ok = self.go(t, g + act.cost);
                self.path.pop();
                if !ok {
                    return false;
                }
            }
            self.seen.remove(&s);
            true
        }
    }
    let mut init = vec![0u64; task.num_fluents().div_ceil(64)];
    for &f in task.init() {
        init[f / 64] |= 1 << (f % 64);
    }
    let seen = Default::default();
    let mut dfs = Dfs { task, bound, cap, node_cap, nodes: 0, path: vec![], seen, out: vec![] };
    (dfs.go(init, 0) && dfs.out.len() <= cap).then_some(dfs.out)
}

/// The three comparison sets of a plan, recomputed from scratch.
#[derive(Debug, Clone)]
pub struct OracleProfile {
    pub actions: BTreeSet<String>,
    pub links: BTreeSet<(String, String, String)>,
    pub states: Vec<BTreeSet<String>>,
}

/// `rename` maps action names into the comparison vocabulary. Links join
/// consecutive actions where the first adds a precondition of the second.
pub fn oracle_profile(task: &GroundTask, actions: &[ActionId], mapping: Option<&ActionMapping>) -> OracleProfile {
    let name = |a: ActionId| {
        let n = task.actions()[a].name.as_str();
        mapping.map_or(n, |m| m.translate(n, Direction::RobotToHuman)).to_string()
    };
    let visible = |f: FluentId| !task.fluents()[f].derived;
    let trace = oracle_trace(task, actions).expect("plan must be executable");
    let states = trace[1..]
        .iter()
        .map(|s| s.iter().filter(|&&f| visible(f)).map(|&f| task.fluent_name(f).to_string()).collect())
        .collect();
    let mut links = BTreeSet::new();
    for w in actions.windows(2) {
        let (a, b) = (&task.actions()[w[0]], &task.actions()[w[1]]);
        for p in &b.pre {
            if a.add.contains(p) && visible(*p) {
                links.insert((name(w[0]), task.fluent_name(*p).to_string(), name(w[1])));
            }
        }
    }
    OracleProfile { actions: actions.iter().map(|&a| name(a)).collect(), links, states }
}

pub fn oracle_jaccard<T: Ord + Clone>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    if union == 0.0 {
        0.0
    } else {
        1.0 - inter / union
    }
}

pub fn oracle_state_sequence(a: &[BTreeSet<String>], b: &[BTreeSet<String>]) -> f64 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if long.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..short.len() {
        total += oracle_jaccard(&long[k], &short[k]);
    }
    (total + (long.len() - short.len()) as f64) / long.len() as f64
}

pub fn oracle_distances(a: &OracleProfile, b: &OracleProfile) -> [f64; 3] {
    [
        oracle_jaccard(&a.actions, &b.actions),
        oracle_jaccard(&a.links, &b.links),
        oracle_state_sequence(&a.states, &b.states),
    ]
}

/// Up to `n` loopless plans within `slack` of the optimum, in lexicographic
/// order.
pub fn plan_pool(task: &GroundTask, slack: u64, n: usize) -> Vec<explicable::Plan> {
    let opt = explicable::planner::optimal_plan(task).unwrap();
    let mut out = Vec::new();
    explicable::planner::enumerate_loopless(task, opt.cost + slack, usize::MAX, |a, cost| {
        out.push(explicable::Plan { actions: a.to_vec(), cost });
        if out.len() == n {
            std::ops::ControlFlow::Break(())
        } else {
            std::ops::ControlFlow::Continue(())
        }
    })
    .unwrap();
    out
}

/// Intercept and weights minimising `Σ(y - b0 - w·x)² + λ|w|²`, from the
/// normal equations `(AᵀA + λD)β = Aᵀy` on the design `A = [1 | X]`, with
/// `D` leaving the intercept unpenalised. Gaussian elimination with partial
/// pivoting.
#[allow(clippy::needless_range_loop)]
pub fn oracle_ridge(xs: &[[f64; 3]], ys: &[f64], lambda: f64) -> [f64; 4] {
    let mut m = [[0.0f64; 5]; 4];
    for (x, &y) in xs.iter().zip(ys) {
        let row = [1.0, x[0], x[1], x[2]];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += row[i] * row[j];
            }
            m[i][4] += row[i] * y;
        }
    }
    for i in 1..4 {
        m[i][i] += lambda;
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..4 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..5 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    [m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]]
}
