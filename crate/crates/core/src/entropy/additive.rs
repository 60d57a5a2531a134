use crate::equivalence::since;
use crate::error::{Error, Result};
use crate::oracle::DualOracle;

use super::EntropyEstimate;

/// `tau = (delta / n) / (c log2(n / delta))`.
pub fn entropy_cutoff(n: usize, delta: f64, c: f64) -> Result<f64> {
    check_delta(n, delta)?;
    let nf = n as f64;
    Ok((delta / nf) / (c * (nf / delta).log2()))
}

/// `m = ceil(ln 6 / delta^2 * log2(1/tau)^2)`.
pub fn entropy_sample_size(delta: f64, tau: f64) -> u64 {
    let range = (1.0 / tau).log2();
    ((6f64.ln() / (delta * delta) * range * range).ceil() as u64).max(1)
}

fn check_delta(n: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(delta > 0.0 && delta < n as f64 / 2.0) {
        return Err(Error::param(
            "delta",
            format!("{delta} not in (0, n/2) for n = {n}"),
        ));
    }
    Ok(())
}

/// `min(2^(delta/3) - 1, 1)`.
pub fn robust_entropy_noise_budget(delta: f64) -> f64 {
    (2f64.powf(delta / 3.0) - 1.0).min(1.0)
}

fn run(oracle: &mut DualOracle, delta: f64, tau: f64) -> Result<EntropyEstimate> {
    let m = entropy_sample_size(delta, tau);
    let start = oracle.stats();
    let mut sum = 0.0;
    for _ in 0..m {
        let s = oracle.samp();
        // a noisy answer may exceed 1; a contribution is never negative
        let p = oracle.eval(s)?.min(1.0);
        if p >= tau {
            sum -= p.log2();
        }
    }
    Ok(EntropyEstimate {
        value: (sum / m as f64).max(0.0),
        delta,
        tau,
        m,
        stats: since(start, oracle.stats()),
    })
}

/// Plug-in estimate `mean of log2(1/D(s)) 1{D(s) >= tau}` over `m` draws.
/// With probability at least 2/3 the result is in `[H - delta, H + delta/2]`.
pub fn estimate_entropy(oracle: &mut DualOracle, delta: f64) -> Result<EntropyEstimate> {
    let tau = entropy_cutoff(oracle.n(), delta, 10.0)?;
    run(oracle, delta, tau)
}

/// As [`estimate_entropy`] with a smaller cutoff, tolerating multiplicative
/// EVAL noise up to [`robust_entropy_noise_budget`].
pub fn estimate_entropy_robust(oracle: &mut DualOracle, delta: f64) -> Result<EntropyEstimate> {
    let tau = entropy_cutoff(oracle.n(), delta, 30.0)?;
    let budget = robust_entropy_noise_budget(delta);
    let noise = oracle.noise_tau();
    if noise > budget {
        return Err(Error::NoiseExceedsTolerance { noise, budget });
    }
    run(oracle, delta, tau)
}
