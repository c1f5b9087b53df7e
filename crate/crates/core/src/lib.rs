//! Sublinear-sample estimation of the total weight of a hidden universe.
//!
//! Estimators reach the universe only through sampling oracles: a
//! proportional oracle returning `(a, w(a))` with probability `w(a)/W`, and
//! optionally a uniform oracle returning each item with probability `1/n`.
//! Items can only be compared for identity.
//!
//! - [`proportional`]: collision estimator with advice `ñ ≥ n`, dyadic
//!   bucket samplers, and the advice-free proportional estimator.
//! - [`hybrid`]: set-size estimation, the harmonic-mean estimator, the
//!   known-`n` hybrid estimator, the unknown-`n` hybrid estimator, and the
//!   coupon collector.
//! - [`graph`]: average degree and edge count from random vertex, random
//!   edge and degree queries.
//! - [`bench`]: instance generators and the seeded Monte Carlo trial runner.

pub mod amplify;
pub mod bench;
pub mod error;
pub mod graph;
pub mod hybrid;
pub mod numeric;
pub mod proportional;
pub mod rng;
pub mod sampling;
pub mod stats;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use sampling::{
    DrawBudget, DrawCounters, HybridOracle, ItemDraw, ItemId, ProportionalOracle, SamplerHandle,
    UniformOracle, WeightedInstance,
};
