use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LabeledSample;
use crate::distances::DistanceVector;

/// Samples with uniform features in `[0, 1]^3` and score
/// `clamp(1 - mean(Δ) + ε, 0, 1)`, `ε ~ N(0, noise_sd)`.
pub fn synthetic_samples(n: usize, noise_sd: f64, seed: u64) -> Vec<LabeledSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).expect("noise_sd must be finite and non-negative");
    (0..n)
        .map(|i| {
            let f = DistanceVector::new(rng.random(), rng.random(), rng.random());
            let y = (1.0 - f.sum() / 3.0 + noise.sample(&mut rng)).clamp(0.0, 1.0);
            LabeledSample::new(f, y, format!("synthetic-{seed}-{i}"))
        })
        .collect()
}
