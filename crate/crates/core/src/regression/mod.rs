//! Regressors from distance vectors to explicability scores: ridge
//! regression, CART regression trees and random forests, with k-fold grid
//! search and a versioned JSON model file.

mod forest;
mod grid;
mod ridge;
mod synthetic;
mod tree;

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distances::DistanceVector;

pub use forest::{train_forest, ForestModel, ForestParams};
pub use grid::{cross_validate, fold_assignment, grid_search, train, GridRow, GridSearchReport, GridSpec, Hyperparameters, ModelKind};
pub use ridge::{train_ridge, RidgeModel};
pub use synthetic::synthetic_samples;
pub use tree::{train_tree, TreeModel, TreeNode, TreeParams};

pub const MODEL_FORMAT: &str = "explicable-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("the design matrix is singular; use a positive lambda")]
    DegenerateDesign,
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("actual values have zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("dataset: {0}")]
    Dataset(String),
}

/// A distance vector paired with a plan score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: DistanceVector,
    pub score: f64,
    /// Where the sample came from: a fixture name or a synthetic seed.
    pub provenance: String,
}

impl LabeledSample {
    pub fn new(features: DistanceVector, score: f64, provenance: impl Into<String>) -> Self {
        LabeledSample { features, score, provenance: provenance.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressionModel {
    Ridge(RidgeModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl RegressionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            RegressionModel::Ridge(_) => ModelKind::Ridge,
            RegressionModel::Tree(_) => ModelKind::Tree,
            RegressionModel::Forest(_) => ModelKind::Forest,
        }
    }

    /// Unclamped prediction.
    pub fn predict_raw(&self, x: &DistanceVector) -> f64 {
        match self {
            RegressionModel::Ridge(m) => m.predict(x),
            RegressionModel::Tree(m) => m.predict(x),
            RegressionModel::Forest(m) => m.predict(x),
        }
    }

    /// Prediction clamped to `[0, 1]`.
    pub fn predict(&self, x: &DistanceVector) -> f64 {
        self.predict_raw(x).clamp(0.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), RegressionError> {
        match self {
            RegressionModel::Ridge(m) => {
                if m.weights.iter().chain([&m.intercept, &m.lambda]).all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(RegressionError::MalformedModel("non-finite ridge parameter".into()))
                }
            }
            RegressionModel::Tree(t) => t.validate(),
            RegressionModel::Forest(f) => {
                if f.trees.is_empty() {
                    return Err(RegressionError::MalformedModel("forest without trees".into()));
                }
                if f.tree_seeds.len() != f.trees.len() {
                    return Err(RegressionError::MalformedModel("one seed per tree expected".into()));
                }
                f.trees.iter().try_for_each(TreeModel::validate)
            }
        }
    }
}

/// Held-out quality recorded with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub samples: usize,
    pub folds: usize,
    pub seed: u64,
    pub cv_r2: Option<f64>,
}

/// On-disk form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: RegressionModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

impl ModelFile {
    pub fn new(model: RegressionModel, training: Option<TrainingMeta>) -> Self {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model, training }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("models serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, RegressionError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| RegressionError::MalformedModel(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(RegressionError::MalformedModel(format!("unknown format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(RegressionError::MalformedModel(format!("unsupported version {}", file.version)));
        }
        file.model.validate()?;
        Ok(file)
    }
}

/// `1 - SS_res / SS_tot`.
pub fn r2_score(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    if actual.len() != predicted.len() {
        return Err(RegressionError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(RegressionError::TooFewSamples { needed: 1, found: 0 });
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(RegressionError::ZeroVariance);
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub const CSV_HEADER: [&str; 4] = ["delta_a", "delta_c", "delta_s", "score"];

/// Reads `delta_a,delta_c,delta_s,score` rows. An optional fifth
/// `provenance` column is kept; otherwise rows are named `row-N`.
pub fn read_samples_csv(reader: impl Read) -> Result<Vec<LabeledSample>, RegressionError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| RegressionError::Dataset(e.to_string()))?.clone();
    if headers.len() < 4 || headers.iter().take(4).ne(CSV_HEADER) {
        return Err(RegressionError::Dataset(format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| RegressionError::Dataset(e.to_string()))?;
        let num = |k: usize| -> Result<f64, RegressionError> {
            let v: f64 = record[k]
                .parse()
                .map_err(|_| RegressionError::Dataset(format!("row {}: `{}` is not a number", i + 1, &record[k])))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(RegressionError::Dataset(format!("row {}: {} outside [0, 1]", i + 1, CSV_HEADER[k])));
            }
            Ok(v)
        };
        let features = DistanceVector::new(num(0)?, num(1)?, num(2)?);
        let provenance = record.get(4).map_or_else(|| format!("row-{}", i + 1), str::to_string);
        out.push(LabeledSample { features, score: num(3)?, provenance });
    }
    Ok(out)
}

pub fn write_samples_csv(samples: &[LabeledSample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.iter().chain(&["provenance"])).expect("in-memory write");
    for s in samples {
        let f = s.features;
        w.write_record([
            f.action.to_string(),
            f.causal.to_string(),
            f.state.to_string(),
            s.score.to_string(),
            s.provenance.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

/// Rows of the `(n, 3)` feature matrix and the target vector.
pub(crate) fn split_xy(samples: &[LabeledSample]) -> (Vec<[f64; 3]>, Vec<f64>) {
    samples.iter().map(|s| (s.features.as_array(), s.score)).unzip()
}
