//! Non-tolerant testers for uniformity, identity to a known distribution and
//! closeness of two unknown distributions, all with `O(1/eps)` queries.
//!
//! Each side draws `m = ceil(c / eps)` samples. A sample `x` drawn from side
//! `A` is a violation when `mass_B(x) < (1 - f eps) mass_A(x)`; the tester
//! rejects at the first violation and returns it as the witness. With
//! `c = 8` and `f = 1/2` an `eps`-far pair is caught with probability at
//! least `1 - e^-4`. Under exact oracles equal distributions never produce a
//! violation.
//!
//! Query bounds: identity and uniformity use at most `m` SAMP and `2m` EVAL
//! queries, so at most `27 / eps` in total; closeness at most `54 / eps`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ExplicitDistribution;
use crate::error::{check_unit_open_closed, Error, Result};
use crate::oracle::{DualOracle, QueryStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    /// The sampled point whose masses violated the test, if any.
    pub witness: Option<usize>,
    pub stats: QueryStats,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accept
    }

    pub(crate) fn accept(stats: QueryStats) -> Self {
        Verdict {
            decision: Decision::Accept,
            witness: None,
            stats,
        }
    }

    pub(crate) fn reject(stats: QueryStats) -> Self {
        Verdict {
            decision: Decision::Reject,
            witness: None,
            stats,
        }
    }
}

/// Constants of the equivalence testers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceConfig {
    /// `c` in `m = ceil(c / eps)`.
    pub sample_constant: f64,
    /// `f` in the violation threshold `(1 - f eps)`.
    pub violation_factor: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            sample_constant: 8.0,
            violation_factor: 0.5,
        }
    }
}

impl EquivalenceConfig {
    pub fn sample_count(&self, epsilon: f64) -> Result<u64> {
        check_unit_open_closed("epsilon", epsilon)?;
        if self.sample_constant.is_nan() || self.sample_constant <= 0.0 {
            return Err(Error::param("sample_constant", "must be positive"));
        }
        if !(self.violation_factor > 0.0 && self.violation_factor * epsilon < 1.0) {
            return Err(Error::param(
                "violation_factor",
                format!(
                    "{} gives no valid threshold at eps = {epsilon}",
                    self.violation_factor
                ),
            ));
        }
        Ok(((self.sample_constant / epsilon).ceil() as u64).max(1))
    }

    fn threshold(&self, epsilon: f64) -> f64 {
        1.0 - self.violation_factor * epsilon
    }
}

fn violates(mass_drawn: f64, mass_other: f64, threshold: f64) -> bool {
    mass_other < threshold * mass_drawn
}

pub fn test_identity_known<R: Rng + ?Sized>(
    oracle: &mut DualOracle,
    d_star: &ExplicitDistribution,
    epsilon: f64,
    rng: &mut R,
) -> Result<Verdict> {
    test_identity_known_with(oracle, d_star, epsilon, rng, EquivalenceConfig::default())
}

/// Identity tester with explicit constants. Draws from `d_star` come from
/// `rng` and are not oracle queries.
pub fn test_identity_known_with<R: Rng + ?Sized>(
    oracle: &mut DualOracle,
    d_star: &ExplicitDistribution,
    epsilon: f64,
    rng: &mut R,
    config: EquivalenceConfig,
) -> Result<Verdict> {
    let m = config.sample_count(epsilon)?;
    if oracle.n() != d_star.n() {
        return Err(Error::DomainMismatch {
            left: oracle.n(),
            right: d_star.n(),
        });
    }
    let threshold = config.threshold(epsilon);
    let start = oracle.stats();
    let finish = |oracle: &DualOracle, witness: Option<usize>| {
        let stats = since(start, oracle.stats());
        match witness {
            None => Verdict::accept(stats),
            Some(x) => Verdict {
                decision: Decision::Reject,
                witness: Some(x),
                stats,
            },
        }
    };
    for _ in 0..m {
        let x = oracle.samp();
        let d = oracle.eval(x)?;
        if violates(d, d_star.mass(x)?, threshold) {
            return Ok(finish(oracle, Some(x)));
        }
    }
    for _ in 0..m {
        let x = d_star.sample(rng);
        let d = oracle.eval(x)?;
        if violates(d_star.mass(x)?, d, threshold) {
            return Ok(finish(oracle, Some(x)));
        }
    }
    Ok(finish(oracle, None))
}

pub fn test_uniformity<R: Rng + ?Sized>(
    oracle: &mut DualOracle,
    epsilon: f64,
    rng: &mut R,
) -> Result<Verdict> {
    let uniform = ExplicitDistribution::uniform(oracle.n())?;
    test_identity_known(oracle, &uniform, epsilon, rng)
}

pub fn test_closeness(o1: &mut DualOracle, o2: &mut DualOracle, epsilon: f64) -> Result<Verdict> {
    test_closeness_with(o1, o2, epsilon, EquivalenceConfig::default())
}

/// Closeness tester. The returned stats are the sum over both oracles.
pub fn test_closeness_with(
    o1: &mut DualOracle,
    o2: &mut DualOracle,
    epsilon: f64,
    config: EquivalenceConfig,
) -> Result<Verdict> {
    let m = config.sample_count(epsilon)?;
    if o1.n() != o2.n() {
        return Err(Error::DomainMismatch {
            left: o1.n(),
            right: o2.n(),
        });
    }
    let threshold = config.threshold(epsilon);
    let (s1, s2) = (o1.stats(), o2.stats());
    let mut witness = None;
    'sides: for flip in [false, true] {
        let (a, b) = if flip {
            (&mut *o2, &mut *o1)
        } else {
            (&mut *o1, &mut *o2)
        };
        for _ in 0..m {
            let x = a.samp();
            let mass_a = a.eval(x)?;
            let mass_b = b.eval(x)?;
            if violates(mass_a, mass_b, threshold) {
                witness = Some(x);
                break 'sides;
            }
        }
    }
    let stats = since(s1, o1.stats()) + since(s2, o2.stats());
    Ok(match witness {
        None => Verdict::accept(stats),
        Some(x) => Verdict {
            decision: Decision::Reject,
            witness: Some(x),
            stats,
        },
    })
}

pub(crate) fn since(start: QueryStats, now: QueryStats) -> QueryStats {
    QueryStats {
        samp_count: now.samp_count - start.samp_count,
        eval_count: now.eval_count - start.eval_count,
        ceval_count: now.ceval_count - start.ceval_count,
    }
}
