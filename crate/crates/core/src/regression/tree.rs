use serde::{Deserialize, Serialize};

use super::{split_xy, LabeledSample, RegressionError};
use crate::distances::DistanceVector;

/// Minimum SSE decrease for a split to count as an improvement, and the
/// margin by which a later candidate must beat an earlier one.
const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_split: 2 }
    }
}

/// Nodes are stored in pre-order; the root is `nodes[0]` and children always
/// come after their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub params: TreeParams,
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn predict(&self, x: &DistanceVector) -> f64 {
        let x = x.as_array();
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
                TreeNode::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    pub fn validate(&self) -> Result<(), RegressionError> {
        let bad = |m: String| Err(RegressionError::MalformedModel(m));
        if self.nodes.is_empty() {
            return bad("tree without nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature > 2 {
                        return bad(format!("node {i}: feature {feature} out of range"));
                    }
                    if !threshold.is_finite() {
                        return bad(format!("node {i}: non-finite threshold"));
                    }
                    for c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return bad(format!("node {i}: child {c} out of order"));
                        }
                    }
                }
                TreeNode::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return bad(format!("node {i}: non-finite leaf"));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn train_tree(samples: &[LabeledSample], params: TreeParams) -> Result<TreeModel, RegressionError> {
    if samples.is_empty() {
        return Err(RegressionError::TooFewSamples { needed: 1, found: 0 });
    }
    let (xs, ys) = split_xy(samples);
    let idx: Vec<usize> = (0..samples.len()).collect();
    Ok(grow(&xs, &ys, idx, params, &mut || vec![0, 1, 2]))
}

/// Grows a tree over the rows `idx` (which may repeat, for bootstrap
/// samples). `features` yields the candidate features at each split.
pub(crate) fn grow(
    xs: &[[f64; 3]],
    ys: &[f64],
    idx: Vec<usize>,
    params: TreeParams,
    features: &mut dyn FnMut() -> Vec<usize>,
) -> TreeModel {
    let mut nodes = Vec::new();
    build(xs, ys, idx, 0, params, features, &mut nodes);
    TreeModel { params, nodes }
}

fn build(
    xs: &[[f64; 3]],
    ys: &[f64],
    mut idx: Vec<usize>,
    depth: usize,
    params: TreeParams,
    features: &mut dyn FnMut() -> Vec<usize>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let me = nodes.len();
    let n = idx.len();
    let mean = idx.iter().map(|&i| ys[i]).sum::<f64>() / n as f64;
    nodes.push(TreeNode::Leaf { value: mean, samples: n });
    let pure = idx.iter().all(|&i| ys[i] == ys[idx[0]]);
    if pure || n < params.min_split.max(2) || params.max_depth.is_some_and(|d| depth >= d) {
        return me;
    }
    let Some((feature, threshold)) = best_split(xs, ys, &mut idx, &features()) else {
        return me;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| xs[i][feature] <= threshold);
    let l = build(xs, ys, left, depth + 1, params, features, nodes);
    let r = build(xs, ys, right, depth + 1, params, features, nodes);
    nodes[me] = TreeNode::Split { feature, threshold, left: l, right: r };
    me
}

/// Split with the lowest summed squared error over the two sides, among
/// midpoints between consecutive distinct values of each candidate feature.
/// Ties go to the lower feature index, then the lower threshold.
fn best_split(xs: &[[f64; 3]], ys: &[f64], idx: &mut [usize], candidates: &[usize]) -> Option<(usize, f64)> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| ys[i]).sum();
    let total_sq: f64 = idx.iter().map(|&i| ys[i] * ys[i]).sum();
    let parent = total_sq - total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();
    for f in features {
        idx.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        let (mut sum, mut sq) = (0.0, 0.0);
        for k in 1..n {
            let y = ys[idx[k - 1]];
            sum += y;
            sq += y * y;
            let (lo, hi) = (xs[idx[k - 1]][f], xs[idx[k]][f]);
            if lo == hi {
                continue;
            }
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let (nl, nr) = (k as f64, (n - k) as f64);
            let sse = (sq - sum * sum / nl) + ((total_sq - sq) - (total - sum).powi(2) / nr);
            if best.is_none_or(|(b, _, _)| sse < b - SPLIT_TOLERANCE) {
                best = Some((sse, f, threshold));
            }
        }
    }
    best.filter(|&(sse, _, _)| sse < parent - SPLIT_TOLERANCE).map(|(_, f, t)| (f, t))
}
