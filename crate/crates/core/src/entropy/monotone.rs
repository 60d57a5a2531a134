use serde::{Deserialize, Serialize};

use crate::equivalence::since;
use crate::error::{Error, Result};
use crate::oracle::CumulativeDualOracle;

use super::birge::{
    birge_decomposition, FlattenedDistribution, FlattenedOracle, ObliviousDecomposition,
};
use super::EntropyEstimate;

/// Parameters of one monotone entropy estimation at `(n, delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePlan {
    pub n: usize,
    pub delta: f64,
    /// Flattening accuracy of the decomposition.
    pub alpha: f64,
    pub intervals: usize,
    /// Interval-mass cutoff.
    pub tau: f64,
    pub m: u64,
}

/// Largest `x` in `(0, hi]` with `f(x) <= target`, for `f` increasing.
fn bisect_largest(hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    if f(hi) <= target {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Picks `alpha` with `alpha (log2(n/alpha) + 2) <= delta/2`, the
/// decomposition at `alpha`, the cutoff `tau` with
/// `l tau log2(n/tau) <= delta/4` and the sample count for accuracy
/// `delta/4` on variables in `[0, log2(n/tau)]`.
pub fn plan_monotone(n: usize, delta: f64) -> Result<(MonotonePlan, ObliviousDecomposition)> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("{delta} must be positive")));
    }
    let nf = n as f64;
    let alpha = bisect_largest(0.5, delta / 2.0, |a| a * ((nf / a).log2() + 2.0));
    let dec = birge_decomposition(n, alpha)?;
    let ell = dec.len() as f64;
    // x log2(n/x) increases up to n/e; stay below that
    let tau = bisect_largest(1.0 / std::f64::consts::E, delta / 4.0, |t| {
        ell * t * (nf / t).log2()
    });
    let range = (nf / tau).log2().max(1.0);
    let m = ((8.0 * 6f64.ln() * range * range / (delta * delta)).ceil() as u64).max(1);
    let plan = MonotonePlan {
        n,
        delta,
        alpha,
        intervals: dec.len(),
        tau,
        m,
    };
    Ok((plan, dec))
}

/// Entropy of a (near-)monotone distribution under SAMP + CEVAL access.
///
/// Draws `m` intervals from the flattening and averages
/// `log2(|I_k| / D(I_k)) 1{D(I_k) >= tau}`. Interval masses are fetched once
/// and reused, so at most `2 l` CEVAL queries are spent.
pub fn estimate_entropy_monotone(
    oracle: &mut CumulativeDualOracle,
    delta: f64,
) -> Result<EntropyEstimate> {
    let (plan, dec) = plan_monotone(oracle.n(), delta)?;
    let start = oracle.stats();
    let mut masses: Vec<Option<f64>> = vec![None; dec.len()];
    let mut sum = 0.0;
    {
        let mut flat = FlattenedOracle::new(oracle, &dec)?;
        for _ in 0..plan.m {
            let k = flat.samp_interval();
            let mass = match masses[k - 1] {
                Some(v) => v,
                None => {
                    let v = flat.mass_interval(k)?;
                    masses[k - 1] = Some(v);
                    v
                }
            };
            if mass >= plan.tau && mass > 0.0 {
                sum += (dec.size(k) as f64 / mass).log2();
            }
        }
    }
    Ok(EntropyEstimate {
        value: (sum / plan.m as f64).max(0.0),
        delta,
        tau: plan.tau,
        m: plan.m,
        stats: since(start, oracle.stats()),
    })
}

/// `H(flat) - E[X]`: the entropy the cutoff discards, i.e. the sum of
/// `D(I_k) log2(|I_k| / D(I_k))` over intervals with `D(I_k) < tau`.
pub fn cutoff_bias(flat: &FlattenedDistribution, tau: f64) -> f64 {
    flat.decomposition
        .sizes()
        .into_iter()
        .zip(&flat.interval_masses)
        .filter(|&(_, &m)| m > 0.0 && m < tau)
        .map(|(s, &m)| m * (s as f64 / m).log2())
        .sum()
}

/// The expectation of the estimator's per-sample variable.
pub fn truncated_expectation(flat: &FlattenedDistribution, tau: f64) -> f64 {
    flat.decomposition
        .sizes()
        .into_iter()
        .zip(&flat.interval_masses)
        .filter(|&(_, &m)| m > 0.0 && m >= tau)
        .map(|(s, &m)| m * (s as f64 / m).log2())
        .sum()
}
