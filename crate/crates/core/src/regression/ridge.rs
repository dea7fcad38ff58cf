use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{split_xy, LabeledSample, RegressionError};
use crate::distances::DistanceVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub weights: [f64; 3],
    pub intercept: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &DistanceVector) -> f64 {
        self.intercept + x.as_array().iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Closed-form ridge regression on centred data, so the intercept is not
/// penalised: `(XcᵀXc + λI) w = Xcᵀyc`, `b0 = ȳ - x̄·w`.
pub fn train_ridge(samples: &[LabeledSample], lambda: f64) -> Result<RidgeModel, RegressionError> {
    if samples.len() < 2 {
        return Err(RegressionError::TooFewSamples { needed: 2, found: samples.len() });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(RegressionError::InvalidHyperparameter(format!("lambda = {lambda}")));
    }
    let (xs, ys) = split_xy(samples);
    let n = samples.len() as f64;
    let x_mean = xs.iter().fold(Vector3::zeros(), |acc, x| acc + Vector3::from(*x)) / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (x, y) in xs.iter().zip(&ys) {
        let xc = Vector3::from(*x) - x_mean;
        gram += xc * xc.transpose();
        rhs += xc * (y - y_mean);
    }
    let system = gram + Matrix3::identity() * lambda;
    let sv = system.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smax == 0.0 || smin <= smax * 1e-12 {
        return Err(RegressionError::DegenerateDesign);
    }
    let w = system.lu().solve(&rhs).ok_or(RegressionError::DegenerateDesign)?;
    Ok(RidgeModel { lambda, weights: [w[0], w[1], w[2]], intercept: y_mean - x_mean.dot(&w) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: [f64; 3], y: f64) -> LabeledSample {
        LabeledSample::new(x.into(), y, "t")
    }

    #[test]
    fn interpolates_a_plane() {
        let f = |x: [f64; 3]| 0.9 - 0.2 * x[0] - 0.3 * x[1] - 0.1 * x[2];
        let xs = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.2, 0.7]];
        let samples: Vec<_> = xs.iter().map(|&x| sample(x, f(x))).collect();
        let m = train_ridge(&samples, 0.0).unwrap();
        for s in &samples {
            assert!((m.predict(&s.features) - s.score).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_lambda_predicts_mean() {
        let samples = vec![sample([0.0, 0.0, 0.0], 0.2), sample([1.0, 1.0, 0.0], 0.6), sample([0.0, 1.0, 1.0], 1.0)];
        let m = train_ridge(&samples, 1e9).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-3));
        assert!((m.predict(&DistanceVector::new(0.3, 0.3, 0.3)) - 0.6).abs() < 1e-3);
    }

    #[test]
    fn collinear_design_is_degenerate() {
        let samples = vec![sample([0.0, 0.0, 0.0], 0.2), sample([1.0, 1.0, 1.0], 0.6), sample([0.5, 0.5, 0.5], 0.4)];
        assert_eq!(train_ridge(&samples, 0.0), Err(RegressionError::DegenerateDesign));
        assert!(train_ridge(&samples, 0.1).is_ok());
        assert!(matches!(train_ridge(&samples[..1], 0.1), Err(RegressionError::TooFewSamples { .. })));
    }
}
