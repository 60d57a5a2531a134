//! Seeded Monte-Carlo experiments over the testers and estimators.
//!
//! Trial `i` derives its seed from the master seed with [`trial_seed`], owns
//! its oracles, and runs on the rayon pool; records are collected in trial
//! order so a report depends only on the configuration. Wall-clock time is
//! recorded only when `timing` is set, which keeps reports byte-identical
//! across runs by default.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{entropy_exact, support_size_exact, tv_distance, ExplicitDistribution};
use crate::entropy::{estimate_entropy, estimate_entropy_monotone, estimate_entropy_robust};
use crate::equivalence::{test_closeness, test_identity_known, Decision, Verdict};
use crate::error::{Error, Result};
use crate::hard_instances::{
    gen_entropy_lb, gen_support_lb, gen_tolerant_lb, gen_uniformity_lb, Coins, EntropyFamily,
    HardInstance,
};
use crate::oracle::{CumulativeDualOracle, DualOracle, NoiseModel, QueryStats};
use crate::support::estimate_support;
use crate::tolerant::{tolerant_test_identity, tolerant_test_robust};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix64(master + GOLDEN * (i + 1))`.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    mix64(master.wrapping_add(GOLDEN.wrapping_mul(i + 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    TestUniformity,
    TestIdentity,
    TestCloseness,
    TolerantL1,
    EstimateEntropy,
    EstimateEntropyMonotone,
    EstimateSupport,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::TestUniformity,
        Algorithm::TestIdentity,
        Algorithm::TestCloseness,
        Algorithm::TolerantL1,
        Algorithm::EstimateEntropy,
        Algorithm::EstimateEntropyMonotone,
        Algorithm::EstimateSupport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::TestUniformity => "test-uniformity",
            Algorithm::TestIdentity => "test-identity",
            Algorithm::TestCloseness => "test-closeness",
            Algorithm::TolerantL1 => "tolerant-l1",
            Algorithm::EstimateEntropy => "estimate-entropy",
            Algorithm::EstimateEntropyMonotone => "estimate-entropy-monotone",
            Algorithm::EstimateSupport => "estimate-support",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

/// A named distribution family with its numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

pub const FAMILIES: [&str; 10] = [
    "uniform",
    "uniform-prefix",
    "point-mass",
    "random",
    "random-monotone",
    "uniformity-lb",
    "tolerant-lb",
    "entropy-lb-sparse",
    "entropy-lb-wide",
    "support-lb",
];

impl GeneratorSpec {
    pub fn new(family: &str, n: usize) -> Self {
        GeneratorSpec {
            family: family.to_string(),
            n,
            params: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn get(&self, key: &'static str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::param(key, format!("required by family `{}`", self.family)))
    }

    fn get_or(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn coins(&self) -> Result<Coins> {
        let p = self.get("p")?;
        Ok(if p == 1.0 {
            Coins::AllHeads
        } else if p == 0.0 {
            Coins::AllTails
        } else {
            Coins::Bernoulli { p, seed: self.seed }
        })
    }

    /// The generated instance, with a certificate for the lower-bound families.
    pub fn instance(&self) -> Result<(ExplicitDistribution, Option<HardInstance>)> {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let plain = |d: Result<ExplicitDistribution>| d.map(|d| (d, None));
        let hard = |h: Result<HardInstance>| h.map(|h| (h.distribution.clone(), Some(h)));
        match self.family.as_str() {
            "uniform" => plain(ExplicitDistribution::uniform(n)),
            "uniform-prefix" => plain(ExplicitDistribution::uniform_prefix(
                n,
                self.get("k")? as usize,
            )),
            "point-mass" => plain(ExplicitDistribution::point_mass(
                n,
                self.get_or("at", 1.0) as usize,
            )),
            "random" => plain(ExplicitDistribution::random(n, &mut rng)),
            "random-monotone" => plain(ExplicitDistribution::random_monotone(n, &mut rng)),
            "uniformity-lb" => hard(gen_uniformity_lb(
                n,
                self.get("epsilon")?,
                self.get_or("r", 0.0) as usize,
            )),
            "tolerant-lb" => hard(gen_tolerant_lb(
                n,
                self.get("k")? as usize,
                self.get_or("alpha", 1.0),
                self.coins()?,
                mix64(self.seed ^ GOLDEN),
            )),
            "entropy-lb-sparse" => hard(gen_entropy_lb(n, EntropyFamily::Sparse, self.seed)),
            "entropy-lb-wide" => hard(gen_entropy_lb(n, EntropyFamily::Wide, self.seed)),
            "support-lb" => hard(gen_support_lb(n, self.coins()?)),
            other => Err(Error::Unknown {
                kind: "family",
                name: other.to_string(),
            }),
        }
    }

    pub fn generate(&self) -> Result<ExplicitDistribution> {
        self.instance().map(|(d, _)| d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSource {
    File(PathBuf),
    Generator(GeneratorSpec),
}

impl DistributionSource {
    pub fn load(&self) -> Result<ExplicitDistribution> {
        match self {
            DistributionSource::File(path) => ExplicitDistribution::read_file(path),
            DistributionSource::Generator(spec) => spec.generate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Random,
    Inflate,
    Deflate,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(NoiseKind::Random),
            "inflate" => Ok(NoiseKind::Inflate),
            "deflate" => Ok(NoiseKind::Deflate),
            other => Err(Error::Unknown {
                kind: "noise mode",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub tau: f64,
    pub kind: NoiseKind,
}

impl NoiseSpec {
    fn model(&self) -> Result<NoiseModel> {
        match self.kind {
            NoiseKind::Random => NoiseModel::random(self.tau),
            NoiseKind::Inflate => NoiseModel::inflate(self.tau),
            NoiseKind::Deflate => NoiseModel::deflate(self.tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub source: DistributionSource,
    /// `D*` for identity and tolerant testing, `D2` for closeness;
    /// uniform when absent.
    #[serde(default)]
    pub reference: Option<DistributionSource>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub eps1: Option<f64>,
    #[serde(default)]
    pub eps2: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, source: DistributionSource) -> Self {
        ExperimentConfig {
            algorithm,
            source,
            reference: None,
            epsilon: None,
            eps1: None,
            eps2: None,
            delta: None,
            noise: None,
            trials: 1,
            master_seed: 0,
            timing: false,
        }
    }
}

fn required(value: Option<f64>, name: &'static str, algorithm: Algorithm) -> Result<f64> {
    value.ok_or_else(|| Error::param(name, format!("required by {algorithm}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub decision: Option<Decision>,
    pub estimate: Option<f64>,
    pub truth: f64,
    pub success: bool,
    pub samp_count: u64,
    pub eval_count: u64,
    pub ceval_count: u64,
    pub wall_time_ms: Option<f64>,
}

impl TrialRecord {
    pub fn queries(&self) -> u64 {
        self.samp_count + self.eval_count + self.ceval_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub algorithm: Algorithm,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_samp_count: f64,
    pub mean_eval_count: f64,
    pub mean_ceval_count: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub runtime_ms: Option<f64>,
}

impl Aggregate {
    pub fn from_records(
        algorithm: Algorithm,
        records: &[TrialRecord],
        runtime_ms: Option<f64>,
    ) -> Self {
        let t = records.len() as f64;
        let mean = |f: fn(&TrialRecord) -> u64| records.iter().map(f).sum::<u64>() as f64 / t;
        let successes = records.iter().filter(|r| r.success).count() as u64;
        Aggregate {
            algorithm,
            trials: records.len() as u64,
            successes,
            success_rate: successes as f64 / t,
            mean_samp_count: mean(|r| r.samp_count),
            mean_eval_count: mean(|r| r.eval_count),
            mean_ceval_count: mean(|r| r.ceval_count),
            mean_queries: mean(TrialRecord::queries),
            max_queries: records.iter().map(TrialRecord::queries).max().unwrap_or(0),
            runtime_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

/// Everything a trial needs, loaded once and shared across the pool.
struct Prepared {
    algorithm: Algorithm,
    dist: Arc<ExplicitDistribution>,
    reference: Arc<ExplicitDistribution>,
    epsilon: f64,
    eps1: f64,
    eps2: f64,
    delta: f64,
    noise: Option<NoiseSpec>,
    truth: f64,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    if config.trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let alg = config.algorithm;
    let dist = config.source.load()?;
    let reference = match &config.reference {
        Some(src) => src.load()?,
        None => ExplicitDistribution::uniform(dist.n())?,
    };
    if reference.n() != dist.n() {
        return Err(Error::DomainMismatch {
            left: dist.n(),
            right: reference.n(),
        });
    }
    let (mut epsilon, mut eps1, mut eps2, mut delta) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    let truth = match alg {
        Algorithm::TestUniformity | Algorithm::TestIdentity | Algorithm::TestCloseness => {
            epsilon = required(config.epsilon, "epsilon", alg)?;
            let reference = if alg == Algorithm::TestUniformity {
                ExplicitDistribution::uniform(dist.n())?
            } else {
                reference.clone()
            };
            tv_distance(&dist, &reference)?
        }
        Algorithm::TolerantL1 => {
            eps1 = required(config.eps1, "eps1", alg)?;
            eps2 = required(config.eps2, "eps2", alg)?;
            tv_distance(&dist, &reference)?
        }
        Algorithm::EstimateEntropy | Algorithm::EstimateEntropyMonotone => {
            delta = required(config.delta, "delta", alg)?;
            entropy_exact(&dist)
        }
        Algorithm::EstimateSupport => {
            epsilon = required(config.epsilon, "epsilon", alg)?;
            support_size_exact(&dist, 1.0 / dist.n() as f64) as f64
        }
    };
    let reference = if alg == Algorithm::TestUniformity {
        ExplicitDistribution::uniform(dist.n())?
    } else {
        reference
    };
    Ok(Prepared {
        algorithm: alg,
        dist: Arc::new(dist),
        reference: Arc::new(reference),
        epsilon,
        eps1,
        eps2,
        delta,
        noise: config.noise,
        truth,
    })
}

fn dual(p: &Prepared, dist: &Arc<ExplicitDistribution>, seed: u64) -> Result<DualOracle> {
    let oracle = DualOracle::new(Arc::clone(dist), seed);
    Ok(match &p.noise {
        Some(spec) => oracle.with_noise(spec.model()?),
        None => oracle,
    })
}

/// Expected ACCEPT inside the null radius, REJECT beyond the far radius,
/// anything in between.
fn verdict_success(v: &Verdict, truth: f64, near: f64, far: f64) -> bool {
    if truth <= near {
        v.accepted()
    } else if truth >= far {
        !v.accepted()
    } else {
        true
    }
}

enum Outcome {
    Verdict(Verdict),
    Estimate(f64, QueryStats),
}

fn run_trial(p: &Prepared, trial: u64, seed: u64, timing: bool) -> Result<TrialRecord> {
    let started = timing.then(Instant::now);
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0x5151));
    let outcome = match p.algorithm {
        Algorithm::TestUniformity | Algorithm::TestIdentity => {
            let mut o = dual(p, &p.dist, seed)?;
            Outcome::Verdict(test_identity_known(
                &mut o,
                &p.reference,
                p.epsilon,
                &mut rng,
            )?)
        }
        Algorithm::TestCloseness => {
            let mut o1 = dual(p, &p.dist, seed)?;
            let mut o2 = dual(p, &p.reference, mix64(seed ^ GOLDEN))?;
            Outcome::Verdict(test_closeness(&mut o1, &mut o2, p.epsilon)?)
        }
        Algorithm::TolerantL1 => {
            let mut o = dual(p, &p.dist, seed)?;
            Outcome::Verdict(if p.noise.is_some() {
                tolerant_test_robust(&mut o, &p.reference, p.eps1, p.eps2)?
            } else {
                tolerant_test_identity(&mut o, &p.reference, p.eps1, p.eps2)?
            })
        }
        Algorithm::EstimateEntropy => {
            let mut o = dual(p, &p.dist, seed)?;
            let est = if p.noise.is_some() {
                estimate_entropy_robust(&mut o, p.delta)?
            } else {
                estimate_entropy(&mut o, p.delta)?
            };
            Outcome::Estimate(est.value, est.stats)
        }
        Algorithm::EstimateEntropyMonotone => {
            if p.noise.is_some() {
                return Err(Error::NoisyOracle);
            }
            let mut o = CumulativeDualOracle::new(Arc::clone(&p.dist), seed);
            let est = estimate_entropy_monotone(&mut o, p.delta)?;
            Outcome::Estimate(est.value, est.stats)
        }
        Algorithm::EstimateSupport => {
            let mut o = dual(p, &p.dist, seed)?;
            let est = estimate_support(&mut o, p.epsilon)?;
            Outcome::Estimate(est.k_hat as f64, est.stats)
        }
    };
    let truth = p.truth;
    let (decision, estimate, success, stats) = match outcome {
        Outcome::Verdict(v) => {
            let success = match p.algorithm {
                Algorithm::TolerantL1 => verdict_success(&v, truth, p.eps1, p.eps2),
                _ => verdict_success(&v, truth, 0.0, p.epsilon),
            };
            (Some(v.decision), None, success, v.stats)
        }
        Outcome::Estimate(value, stats) => {
            let success = match p.algorithm {
                Algorithm::EstimateEntropy => {
                    value >= truth - p.delta && value <= truth + p.delta / 2.0
                }
                Algorithm::EstimateEntropyMonotone => (value - truth).abs() <= p.delta,
                _ => (value - truth).abs() <= p.epsilon * p.dist.n() as f64,
            };
            (None, Some(value), success, stats)
        }
    };
    Ok(TrialRecord {
        trial,
        seed,
        decision,
        estimate,
        truth,
        success,
        samp_count: stats.samp_count,
        eval_count: stats.eval_count,
        ceval_count: stats.ceval_count,
        wall_time_ms: started.map(|t| t.elapsed().as_secs_f64() * 1e3),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let prepared = prepare(config)?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            run_trial(
                &prepared,
                i,
                trial_seed(config.master_seed, i),
                config.timing,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let runtime = config.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    let aggregate = Aggregate::from_records(config.algorithm, &records, runtime);
    Ok(Report { records, aggregate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// `epsilon`; for `tolerant-l1` the gap `eps2 - eps1` with `eps1` fixed.
    Epsilon,
    Delta,
    /// Domain size; needs a generator source.
    N,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" | "eps" => Ok(SweepAxis::Epsilon),
            "delta" => Ok(SweepAxis::Delta),
            "n" => Ok(SweepAxis::N),
            other => Err(Error::Unknown {
                kind: "sweep axis",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub aggregate: Aggregate,
}

fn resize(source: &DistributionSource, n: usize) -> Result<DistributionSource> {
    match source {
        DistributionSource::Generator(spec) => {
            let mut spec = spec.clone();
            spec.n = n;
            Ok(DistributionSource::Generator(spec))
        }
        DistributionSource::File(_) => Err(Error::param(
            "n",
            "cannot resize a distribution read from a file",
        )),
    }
}

/// One aggregate row per axis value.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::param("values", "sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&value| {
            let mut cfg = config.clone();
            match axis {
                SweepAxis::Epsilon if cfg.algorithm == Algorithm::TolerantL1 => {
                    cfg.eps2 = Some(required(cfg.eps1, "eps1", cfg.algorithm)? + value);
                }
                SweepAxis::Epsilon => cfg.epsilon = Some(value),
                SweepAxis::Delta => cfg.delta = Some(value),
                SweepAxis::N => {
                    if !(value >= 1.0 && value.fract() == 0.0) {
                        return Err(Error::param(
                            "n",
                            format!("{value} is not a positive integer"),
                        ));
                    }
                    let n = value as usize;
                    cfg.source = resize(&cfg.source, n)?;
                    if let Some(reference) = &cfg.reference {
                        cfg.reference = Some(resize(reference, n)?);
                    }
                }
            }
            Ok(SweepRow {
                value,
                aggregate: run_experiment(&cfg)?.aggregate,
            })
        })
        .collect()
}

/// Sweep rows as JSON lines, or as CSV with one column per aggregate field.
pub fn write_sweep<W: Write>(rows: &[SweepRow], mut out: W, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "value",
                "success_rate",
                "mean_samp_count",
                "mean_eval_count",
                "mean_ceval_count",
                "mean_queries",
                "max_queries",
            ])?;
            for row in rows {
                let a = &row.aggregate;
                w.write_record([
                    row.value.to_string(),
                    a.success_rate.to_string(),
                    a.mean_samp_count.to_string(),
                    a.mean_eval_count.to_string(),
                    a.mean_ceval_count.to_string(),
                    a.mean_queries.to_string(),
                    a.max_queries.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Unknown {
                kind: "format",
                name: other.to_string(),
            }),
        }
    }
}

impl Report {
    /// JSON lines: one record per line, then the aggregate.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &self.aggregate)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// CSV rows of the trial records; the aggregate is recomputed on read.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: W, format: ReportFormat) -> Result<()> {
        match format {
            ReportFormat::Json => self.write_jsonl(out),
            ReportFormat::Csv => self.write_csv(out),
        }
    }

    pub fn write_file(&self, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out, format)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_file(
        path: impl AsRef<Path>,
        format: ReportFormat,
        algorithm: Algorithm,
    ) -> Result<Self> {
        let path = path.as_ref();
        let malformed = |reason: String| Error::MalformedFile {
            path: path.to_path_buf(),
            reason,
        };
        match format {
            ReportFormat::Json => {
                let lines: Vec<String> = BufReader::new(File::open(path)?)
                    .lines()
                    .collect::<std::io::Result<_>>()?;
                let lines: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
                let (last, rest) = lines
                    .split_last()
                    .ok_or_else(|| malformed("empty report".into()))?;
                let aggregate: Aggregate = serde_json::from_str(last)?;
                let records = rest
                    .iter()
                    .map(|l| serde_json::from_str(l))
                    .collect::<std::result::Result<Vec<TrialRecord>, _>>()?;
                Ok(Report { records, aggregate })
            }
            ReportFormat::Csv => {
                let mut reader = csv::Reader::from_path(path)?;
                let records = reader
                    .deserialize()
                    .collect::<std::result::Result<Vec<TrialRecord>, _>>()?;
                if records.is_empty() {
                    return Err(malformed("no trial rows".into()));
                }
                let aggregate = Aggregate::from_records(algorithm, &records, None);
                Ok(Report { records, aggregate })
            }
        }
    }
}
