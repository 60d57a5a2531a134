//! Entropy estimation: the additive plug-in estimator with a cutoff, its
//! noise-robust variant, and the monotone estimator that works on the
//! flattening over an oblivious decomposition.

mod additive;
mod birge;
mod monotone;

use serde::{Deserialize, Serialize};

use crate::oracle::QueryStats;

pub use additive::{
    entropy_cutoff, entropy_sample_size, estimate_entropy, estimate_entropy_robust,
    robust_entropy_noise_budget,
};
pub use birge::{
    birge_decomposition, flatten, interval_flattening_error, FlattenedDistribution,
    FlattenedOracle, ObliviousDecomposition,
};
pub use monotone::{
    cutoff_bias, estimate_entropy_monotone, plan_monotone, truncated_expectation, MonotonePlan,
};

/// An entropy estimate in bits together with the parameters that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub delta: f64,
    pub tau: f64,
    pub m: u64,
    pub stats: QueryStats,
}
