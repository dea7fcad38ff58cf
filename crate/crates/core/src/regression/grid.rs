use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestParams};
use super::ridge::train_ridge;
use super::tree::{train_tree, TreeParams};
use super::{r2_score, LabeledSample, RegressionError, RegressionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Tree,
    Forest,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ridge" => Ok(ModelKind::Ridge),
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            other => Err(format!("unknown model kind `{other}` (expected ridge, tree or forest)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
        })
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparameters {
    Ridge { lambda: f64 },
    Tree(TreeParams),
    Forest(ForestParams),
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = |d: Option<usize>| d.map_or("unlimited".to_string(), |d| d.to_string());
        match self {
            Hyperparameters::Ridge { lambda } => write!(f, "ridge lambda={lambda}"),
            Hyperparameters::Tree(t) => write!(f, "tree max_depth={} min_split={}", depth(t.max_depth), t.min_split),
            Hyperparameters::Forest(p) => write!(
                f,
                "forest n_trees={} max_depth={} min_split={} feature_subset={} bootstrap={}",
                p.n_trees,
                depth(p.tree.max_depth),
                p.tree.min_split,
                p.feature_subset,
                p.bootstrap
            ),
        }
    }
}

/// Trains one model. `seed` only matters for forests.
pub fn train(samples: &[LabeledSample], params: &Hyperparameters, seed: u64) -> Result<RegressionModel, RegressionError> {
    Ok(match *params {
        Hyperparameters::Ridge { lambda } => RegressionModel::Ridge(train_ridge(samples, lambda)?),
        Hyperparameters::Tree(p) => RegressionModel::Tree(train_tree(samples, p)?),
        Hyperparameters::Forest(p) => RegressionModel::Forest(train_forest(samples, p, seed)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Depth {
    Limit(usize),
    /// The string `"unlimited"`.
    Named(String),
}

impl Depth {
    fn resolve(&self) -> Result<Option<usize>, RegressionError> {
        match self {
            Depth::Limit(d) => Ok(Some(*d)),
            Depth::Named(s) if s == "unlimited" => Ok(None),
            Depth::Named(s) => Err(RegressionError::InvalidHyperparameter(format!("max_depth `{s}`"))),
        }
    }
}

fn unlimited() -> Vec<Depth> {
    vec![Depth::Named("unlimited".into())]
}

fn two() -> Vec<usize> {
    vec![2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeGrid {
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeGrid {
    #[serde(default = "unlimited")]
    pub max_depth: Vec<Depth>,
    #[serde(default = "two")]
    pub min_split: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    #[serde(default = "unlimited")]
    pub max_depth: Vec<Depth>,
    #[serde(default = "two")]
    pub min_split: Vec<usize>,
    pub feature_subset: Vec<usize>,
    #[serde(default = "yes")]
    pub bootstrap: Vec<bool>,
}

fn yes() -> Vec<bool> {
    vec![true]
}

/// Hyperparameter grids per model kind, read from TOML tables `[ridge]`,
/// `[tree]` and `[forest]` whose keys hold lists of values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub ridge: Option<RidgeGrid>,
    pub tree: Option<TreeGrid>,
    pub forest: Option<ForestGrid>,
}

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self, RegressionError> {
        toml::from_str(text).map_err(|e| RegressionError::InvalidHyperparameter(e.to_string()))
    }

    /// The cartesian product for one kind, in the order the keys are
    /// declared above with the last key varying fastest.
    pub fn expand(&self, kind: ModelKind) -> Result<Vec<Hyperparameters>, RegressionError> {
        let missing = || RegressionError::InvalidHyperparameter(format!("the grid has no [{kind}] table"));
        let mut out = Vec::new();
        match kind {
            ModelKind::Ridge => {
                let g = self.ridge.as_ref().ok_or_else(missing)?;
                out.extend(g.lambda.iter().map(|&lambda| Hyperparameters::Ridge { lambda }));
            }
            ModelKind::Tree => {
                let g = self.tree.as_ref().ok_or_else(missing)?;
                for d in &g.max_depth {
                    for &min_split in &g.min_split {
                        out.push(Hyperparameters::Tree(TreeParams { max_depth: d.resolve()?, min_split }));
                    }
                }
            }
            ModelKind::Forest => {
                let g = self.forest.as_ref().ok_or_else(missing)?;
                for &n_trees in &g.n_trees {
                    for d in &g.max_depth {
                        for &min_split in &g.min_split {
                            for &feature_subset in &g.feature_subset {
                                for &bootstrap in &g.bootstrap {
                                    out.push(Hyperparameters::Forest(ForestParams {
                                        n_trees,
                                        tree: TreeParams { max_depth: d.resolve()?, min_split },
                                        feature_subset,
                                        bootstrap,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(RegressionError::InvalidHyperparameter(format!("the [{kind}] grid is empty")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: Hyperparameters,
    /// Held-out R² per fold; `None` where the fold's targets are constant.
    pub fold_r2: Vec<Option<f64>>,
    /// Mean over the folds that have an R².
    pub mean_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub folds: usize,
    pub seed: u64,
    pub rows: Vec<GridRow>,
    /// Index into `rows` of the best mean R²; the first row wins ties.
    pub winner: usize,
}

impl GridSearchReport {
    pub fn best(&self) -> &GridRow {
        &self.rows[self.winner]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}-fold cross-validation, seed {}", self.folds, self.seed);
        for (i, row) in self.rows.iter().enumerate() {
            let mark = if i == self.winner { '*' } else { ' ' };
            let r2 = row.mean_r2.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(out, "{mark} {r2:>8}  {}", row.params);
        }
        out
    }
}

/// Fold of each sample: a seeded shuffle of the indices dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Held-out R² of `params` on each fold.
pub fn cross_validate(
    samples: &[LabeledSample],
    params: &Hyperparameters,
    folds: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>, RegressionError> {
    if folds < 2 {
        return Err(RegressionError::InvalidHyperparameter("at least 2 folds are needed".into()));
    }
    if samples.len() < folds {
        return Err(RegressionError::TooFewSamples { needed: folds, found: samples.len() });
    }
    let assignment = fold_assignment(samples.len(), folds, seed);
    (0..folds)
        .map(|k| {
            let (test, train_set): (Vec<_>, Vec<_>) =
                samples.iter().zip(&assignment).partition(|(_, &f)| f == k);
            let train_set: Vec<LabeledSample> = train_set.into_iter().map(|(s, _)| s.clone()).collect();
            let model = train(&train_set, params, seed)?;
            let actual: Vec<f64> = test.iter().map(|(s, _)| s.score).collect();
            let predicted: Vec<f64> = test.iter().map(|(s, _)| model.predict_raw(&s.features)).collect();
            match r2_score(&actual, &predicted) {
                Ok(r2) => Ok(Some(r2)),
                Err(RegressionError::ZeroVariance) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn grid_search(
    samples: &[LabeledSample],
    grid: &[Hyperparameters],
    folds: usize,
    seed: u64,
) -> Result<GridSearchReport, RegressionError> {
    if grid.is_empty() {
        return Err(RegressionError::InvalidHyperparameter("empty grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut winner = 0;
    for (i, params) in grid.iter().enumerate() {
        let fold_r2 = cross_validate(samples, params, folds, seed)?;
        let scored: Vec<f64> = fold_r2.iter().flatten().copied().collect();
        let mean_r2 = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
        let beats = |best: &GridRow| match (mean_r2, best.mean_r2) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            _ => false,
        };
        if i > 0 && beats(&rows[winner]) {
            winner = i;
        }
        rows.push(GridRow { params: *params, fold_r2, mean_r2 });
    }
    Ok(GridSearchReport { folds, seed, rows, winner })
}
