//! Seeded random sampling. Every sampler in the crate draws from a ChaCha
//! stream so identical seeds reproduce identical runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the open box `lower < p < upper`.
pub fn uniform_box(rng: &mut SampleRng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        })
        .collect()
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn bernoulli(rng: &mut SampleRng, p: f64) -> bool {
    rng.random_bool(p)
}
