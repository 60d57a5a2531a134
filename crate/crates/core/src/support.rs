//! Additive support-size estimation under dual access, for distributions
//! promised to put mass at least `1/n` on every point of their support.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::equivalence::since;
use crate::error::{check_open_unit, Result};
use crate::oracle::{DualOracle, QueryStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportRegime {
    /// `m = ceil(4/eps^2)` draws, each weighted by `1/D(x)`.
    Expectation,
    /// `m = ceil(n ln 3n)` draws, distinct elements counted.
    CouponCollector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub k_hat: usize,
    pub regime: SupportRegime,
    pub m: u64,
    pub stats: QueryStats,
}

/// The expectation regime applies iff `eps > 2 / sqrt(n ln(3n))`.
pub fn support_regime(n: usize, epsilon: f64) -> SupportRegime {
    let nf = n as f64;
    if epsilon > 2.0 / (nf * (3.0 * nf).ln()).sqrt() {
        SupportRegime::Expectation
    } else {
        SupportRegime::CouponCollector
    }
}

pub fn support_sample_size(n: usize, epsilon: f64) -> u64 {
    let nf = n as f64;
    match support_regime(n, epsilon) {
        SupportRegime::Expectation => (4.0 / (epsilon * epsilon)).ceil() as u64,
        SupportRegime::CouponCollector => (nf * (3.0 * nf).ln()).ceil().max(1.0) as u64,
    }
}

/// With probability at least 2/3, `|k_hat - |{x : D(x) >= 1/n}|| <= eps n`
/// provided the minimum-mass promise holds.
pub fn estimate_support(oracle: &mut DualOracle, epsilon: f64) -> Result<SupportEstimate> {
    check_open_unit("epsilon", epsilon)?;
    let n = oracle.n();
    let regime = support_regime(n, epsilon);
    let m = support_sample_size(n, epsilon);
    let start = oracle.stats();
    let k_hat = match regime {
        SupportRegime::Expectation => {
            let floor = 1.0 / n as f64;
            let mut sum = 0.0;
            for _ in 0..m {
                let x = oracle.samp();
                let p = oracle.eval(x)?;
                if p >= floor * (1.0 - 1e-12) {
                    sum += 1.0 / p;
                }
            }
            let y = sum / m as f64;
            // 1/D(x) for D(x) = 1/n may come out a hair above n
            ((y - y * 1e-12).ceil().max(0.0) as usize).min(n)
        }
        SupportRegime::CouponCollector => {
            let mut seen = HashSet::new();
            for _ in 0..m {
                seen.insert(oracle.samp());
            }
            seen.len()
        }
    };
    Ok(SupportEstimate {
        k_hat,
        regime,
        m,
        stats: since(start, oracle.stats()),
    })
}

/// Checks the minimum-mass promise with one EVAL per point. Meant for
/// fixtures; it costs `n` queries.
pub fn verify_min_mass_promise(oracle: &mut DualOracle) -> Result<bool> {
    let n = oracle.n();
    let floor = 1.0 / n as f64;
    for x in 1..=n {
        let p = oracle.eval(x)?;
        if p > 0.0 && p < floor * (1.0 - 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}
