//! Seed derivation for reproducible, independent per-trial random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed; the 64-bit
//! ChaCha stream id separates trials and the roles within a trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role of a stream inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Randomness consumed by the sampling oracle.
    Oracle = 0,
    /// Private coins of the estimator (rejection steps).
    Estimator = 1,
}

/// Stream reserved for instance and graph generators.
const GENERATOR_STREAM: u64 = u64::MAX;

pub fn stream(master_seed: u64, trial: u64, lane: Lane) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((trial << 1) | lane as u64);
    rng
}

pub fn generator_stream(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GENERATOR_STREAM);
    rng
}
