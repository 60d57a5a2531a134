//! Dual (SAMP + EVAL) and cumulative dual (SAMP + CEVAL) access to a hidden
//! [`ExplicitDistribution`], with exact per-oracle query accounting.
//!
//! Sampling is inverse-CDF over the precomputed prefix sums, so a given seed
//! yields one reproducible sample stream. Noise only ever touches EVAL answers
//! and draws from its own RNG stream, so turning noise on or off never changes
//! the samples an oracle returns.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ExplicitDistribution;
use crate::error::{Error, Result};

const SAMPLE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Number of queries issued to each oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub samp_count: u64,
    pub eval_count: u64,
    pub ceval_count: u64,
}

impl QueryStats {
    pub fn total(&self) -> u64 {
        self.samp_count + self.eval_count + self.ceval_count
    }
}

impl std::ops::Add for QueryStats {
    type Output = QueryStats;

    fn add(self, rhs: QueryStats) -> QueryStats {
        QueryStats {
            samp_count: self.samp_count + rhs.samp_count,
            eval_count: self.eval_count + rhs.eval_count,
            ceval_count: self.ceval_count + rhs.ceval_count,
        }
    }
}

/// Picks the multiplier applied to the true mass of point `j` (1-based).
pub type NoiseCallback = Box<dyn FnMut(usize, f64) -> f64 + Send>;

pub enum NoiseMode {
    /// Multiplier `exp(u)` with `u` uniform in `[-ln(1+tau), ln(1+tau)]`.
    Random,
    /// Multiplier chosen by the caller per query; clamped into the envelope.
    Adversarial(NoiseCallback),
}

/// Multiplicative EVAL noise: each answer lies in `[D(j)/(1+tau), (1+tau)D(j)]`.
pub struct NoiseModel {
    tau: f64,
    mode: NoiseMode,
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            NoiseMode::Random => "random",
            NoiseMode::Adversarial(_) => "adversarial",
        };
        f.debug_struct("NoiseModel")
            .field("tau", &self.tau)
            .field("mode", &mode)
            .finish()
    }
}

impl NoiseModel {
    pub fn new(tau: f64, mode: NoiseMode) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("{tau} must be positive")));
        }
        Ok(NoiseModel { tau, mode })
    }

    pub fn random(tau: f64) -> Result<Self> {
        Self::new(tau, NoiseMode::Random)
    }

    pub fn adversarial(
        tau: f64,
        callback: impl FnMut(usize, f64) -> f64 + Send + 'static,
    ) -> Result<Self> {
        Self::new(tau, NoiseMode::Adversarial(Box::new(callback)))
    }

    /// Every answer inflated by the full factor `1 + tau`.
    pub fn inflate(tau: f64) -> Result<Self> {
        Self::adversarial(tau, move |_, _| 1.0 + tau)
    }

    /// Every answer deflated by the full factor `1 / (1 + tau)`.
    pub fn deflate(tau: f64) -> Result<Self> {
        Self::adversarial(tau, move |_, _| 1.0 / (1.0 + tau))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn perturb<R: Rng>(&mut self, j: usize, mass: f64, rng: &mut R) -> f64 {
        if mass == 0.0 {
            return 0.0;
        }
        let hi = 1.0 + self.tau;
        let factor = match &mut self.mode {
            NoiseMode::Random => {
                let spread = hi.ln();
                (rng.random_range(-spread..=spread)).exp()
            }
            NoiseMode::Adversarial(callback) => callback(j, mass),
        };
        let factor = if factor.is_nan() { 1.0 } else { factor };
        mass * factor.clamp(1.0 / hi, hi)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SAMP and EVAL access to a hidden distribution.
#[derive(Debug)]
pub struct DualOracle {
    dist: Arc<ExplicitDistribution>,
    rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    noise: Option<NoiseModel>,
    stats: QueryStats,
}

impl DualOracle {
    pub fn new(dist: impl Into<Arc<ExplicitDistribution>>, seed: u64) -> Self {
        DualOracle {
            dist: dist.into(),
            rng: stream_rng(seed, SAMPLE_STREAM),
            noise_rng: stream_rng(seed, NOISE_STREAM),
            noise: None,
            stats: QueryStats::default(),
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = Some(noise);
        self
    }

    /// Domain size. Knowing `n` is part of the access model, not a query.
    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    /// The noise level `tau`, or 0 for an exact oracle.
    pub fn noise_tau(&self) -> f64 {
        self.noise.as_ref().map_or(0.0, NoiseModel::tau)
    }

    pub fn is_noisy(&self) -> bool {
        self.noise.is_some()
    }

    /// One independent draw from `D`.
    pub fn samp(&mut self) -> usize {
        self.stats.samp_count += 1;
        self.dist.sample(&mut self.rng)
    }

    /// `D(j)`, perturbed if a noise model is attached.
    pub fn eval(&mut self, j: usize) -> Result<f64> {
        let mass = self.dist.mass(j)?;
        self.stats.eval_count += 1;
        Ok(match &mut self.noise {
            None => mass,
            Some(noise) => noise.perturb(j, mass, &mut self.noise_rng),
        })
    }
}

/// SAMP and CEVAL access to a hidden distribution.
#[derive(Debug)]
pub struct CumulativeDualOracle {
    dist: Arc<ExplicitDistribution>,
    rng: ChaCha8Rng,
    stats: QueryStats,
    noisy: bool,
}

impl CumulativeDualOracle {
    pub fn new(dist: impl Into<Arc<ExplicitDistribution>>, seed: u64) -> Self {
        CumulativeDualOracle {
            dist: dist.into(),
            rng: stream_rng(seed, SAMPLE_STREAM),
            stats: QueryStats::default(),
            noisy: false,
        }
    }

    /// Marks the oracle as carrying noisy CEVAL answers. Noisy CEVAL semantics
    /// are not modelled; the flag exists so that consumers which need exact
    /// answers (EVAL simulation, flattening) can refuse such oracles.
    pub fn mark_noisy(mut self) -> Self {
        self.noisy = true;
        self
    }

    pub fn is_noisy(&self) -> bool {
        self.noisy
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    pub fn samp(&mut self) -> usize {
        self.stats.samp_count += 1;
        self.dist.sample(&mut self.rng)
    }

    /// `D([j]) = D(1) + ... + D(j)`.
    pub fn ceval(&mut self, j: usize) -> Result<f64> {
        let value = self.dist.cumulative(j)?;
        self.stats.ceval_count += 1;
        Ok(value)
    }

    /// `D(j)` as `D([j]) - D([j-1])`: two CEVAL queries, one when `j = 1`.
    pub fn eval_via_ceval(&mut self, j: usize) -> Result<f64> {
        if self.noisy {
            return Err(Error::NoisyOracle);
        }
        self.dist.check_index(j)?;
        let upper = self.ceval(j)?;
        let lower = if j == 1 { 0.0 } else { self.ceval(j - 1)? };
        Ok((upper - lower).max(0.0))
    }
}
