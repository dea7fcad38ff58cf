use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeModel, TreeParams};
use super::{split_xy, LabeledSample, RegressionError};
use crate::distances::DistanceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Features considered at each split, 1 to 3.
    pub feature_subset: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, tree: TreeParams::default(), feature_subset: 1, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    /// `tree_seeds[i]` drove the resample and feature draws of `trees[i]`.
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    /// Mean of the member trees' predictions.
    pub fn predict(&self, x: &DistanceVector) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Seed of tree `i`: a draw from a generator keyed by the forest seed, so
/// trees can be grown in any order and still match.
fn tree_seed(seed: u64, i: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng.random()
}

pub fn train_forest(samples: &[LabeledSample], params: ForestParams, seed: u64) -> Result<ForestModel, RegressionError> {
    if params.n_trees == 0 {
        return Err(RegressionError::InvalidHyperparameter("n_trees must be at least 1".into()));
    }
    if !(1..=3).contains(&params.feature_subset) {
        return Err(RegressionError::InvalidHyperparameter(format!(
            "feature_subset must be 1..=3, got {}",
            params.feature_subset
        )));
    }
    if samples.is_empty() {
        return Err(RegressionError::TooFewSamples { needed: 1, found: 0 });
    }
    let (xs, ys) = split_xy(samples);
    let n = samples.len();
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|i| tree_seed(seed, i)).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let idx: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            let mut features = || {
                if params.feature_subset == 3 {
                    vec![0, 1, 2]
                } else {
                    sample_indices(&mut rng, 3, params.feature_subset).into_vec()
                }
            };
            grow(&xs, &ys, idx, params.tree, &mut features)
        })
        .collect();
    Ok(ForestModel { params, seed, tree_seeds, trees })
}

#[cfg(test)]
mod tests {
    use super::super::{train_tree, TreeNode};
    use super::*;

    fn data() -> Vec<LabeledSample> {
        (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                LabeledSample::new(DistanceVector::new(x, (x * 7.0) % 1.0, 1.0 - x), 1.0 - x * x, "t")
            })
            .collect()
    }

    #[test]
    fn single_full_tree_without_bootstrap_is_a_tree() {
        let s = data();
        let p = ForestParams { n_trees: 1, tree: TreeParams::default(), feature_subset: 3, bootstrap: false };
        let f = train_forest(&s, p, 7).unwrap();
        assert_eq!(f.trees[0], train_tree(&s, TreeParams::default()).unwrap());
    }

    #[test]
    fn same_seed_same_model() {
        let s = data();
        let p = ForestParams { n_trees: 10, ..Default::default() };
        let a = serde_json::to_string(&train_forest(&s, p, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&train_forest(&s, p, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&train_forest(&s, p, 4).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prediction_is_mean_of_leaves() {
        let leaf = |v| TreeModel { params: TreeParams::default(), nodes: vec![TreeNode::Leaf { value: v, samples: 1 }] };
        let f = ForestModel {
            params: ForestParams { n_trees: 3, ..Default::default() },
            seed: 0,
            tree_seeds: vec![0, 1, 2],
            trees: vec![leaf(0.2), leaf(0.5), leaf(0.8)],
        };
        assert!((f.predict(&DistanceVector::ZERO) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let s = data();
        assert!(train_forest(&s, ForestParams { n_trees: 0, ..Default::default() }, 0).is_err());
        assert!(train_forest(&s, ForestParams { feature_subset: 4, ..Default::default() }, 0).is_err());
    }
}
