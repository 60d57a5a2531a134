//! Chernoff-Hoeffding tail bounds for sums of independent `[0, 1]` variables,
//! the sample sizes they imply, and exact TV distance between binomial laws
//! (the "biased coin" distinguishability quantity).

use crate::error::{check_open_unit, check_unit_open_closed, Error, Result};

/// One-sided additive bound `exp(-2 gamma^2 m)` on
/// `Pr[mean - E[mean] >= gamma]` for `m` variables in `[0, 1]`.
pub fn additive_tail(m: u64, gamma: f64) -> Result<f64> {
    check_m(m)?;
    check_unit_open_closed("gamma", gamma)?;
    Ok((-2.0 * gamma * gamma * m as f64).exp())
}

/// Multiplicative bounds for a sum `X` with `p_low <= E[X] <= p_high`:
/// `(exp(-gamma^2 p_high / 3), exp(-gamma^2 p_low / 2))`, bounding
/// `Pr[X > (1+gamma) p_high]` and `Pr[X < (1-gamma) p_low]` respectively.
pub fn mult_tails(m: u64, gamma: f64, p_low: f64, p_high: f64) -> Result<(f64, f64)> {
    check_m(m)?;
    check_unit_open_closed("gamma", gamma)?;
    if !(p_low >= 0.0 && p_low <= p_high) {
        return Err(Error::param(
            "p_low",
            format!("need 0 <= p_low <= p_high, got {p_low} and {p_high}"),
        ));
    }
    if p_high > m as f64 {
        return Err(Error::param("p_high", format!("{p_high} exceeds m = {m}")));
    }
    let g2 = gamma * gamma;
    Ok(((-g2 * p_high / 3.0).exp(), (-g2 * p_low / 2.0).exp()))
}

/// Smallest `m` with `2 exp(-2 gamma^2 m) <= delta`.
pub fn additive_sample_size(gamma: f64, delta: f64) -> Result<u64> {
    check_unit_open_closed("gamma", gamma)?;
    check_open_unit("delta", delta)?;
    let m = ((2.0 / delta).ln() / (2.0 * gamma * gamma)).ceil() as u64;
    Ok(m.max(1))
}

/// Exact `d_TV(Bin(m, p), Bin(m, p + epsilon))`, summed in log space.
pub fn binomial_tv(m: u64, p: f64, epsilon: f64) -> Result<f64> {
    check_m(m)?;
    if m > 10_000 {
        return Err(Error::param("m", format!("{m} > 10^4")));
    }
    let q = p + epsilon;
    for (name, v) in [("p", p), ("p + epsilon", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::param(
                if name == "p" { "p" } else { "epsilon" },
                format!("{name} = {v} not in [0, 1]"),
            ));
        }
    }
    let mut ln_choose = 0.0;
    let mut l1 = 0.0;
    for k in 0..=m {
        if k > 0 {
            ln_choose += ((m - k + 1) as f64).ln() - (k as f64).ln();
        }
        l1 += (binomial_pmf(ln_choose, m, k, p) - binomial_pmf(ln_choose, m, k, q)).abs();
    }
    Ok((0.5 * l1).min(1.0))
}

fn binomial_pmf(ln_choose: f64, m: u64, k: u64, p: f64) -> f64 {
    let ln = ln_choose + ln_pow(p, k) + ln_pow(1.0 - p, m - k);
    ln.exp()
}

/// `k * ln(p)` with `0 * ln(0) = 0`.
fn ln_pow(p: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

fn check_m(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::param("m", "must be at least 1"))
    } else {
        Ok(())
    }
}
