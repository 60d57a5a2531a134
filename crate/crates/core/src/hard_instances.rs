//! Lower-bound distribution families, each generated together with an exact
//! certificate of the property value it was built to have.
//!
//! * [`gen_uniformity_lb`]: a heavy point followed by a zero block, shifted
//!   cyclically; exactly `eps'`-far from uniform and with a CDF equal to `j/n`
//!   outside the shifted chunk.
//! * [`gen_tolerant_lb`]: paired buckets `(A_k, B_k)` whose masses are tilted
//!   by `±alpha/n` on a coin flip.
//! * [`gen_entropy_lb`]: a heavy first element plus a uniform random subset,
//!   sparse (`log n` points) or wide (`n^(1/4) log n` points).
//! * [`gen_support_lb`]: mirrored pairs `(i, n+1-i)` that either stay at
//!   `1/n` each or collapse to `(2/n, 0)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{entropy_exact, support_size_exact, tv_distance, ExplicitDistribution};
use crate::error::{Error, Result};

/// Exactly computed property value shipped with a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    ExactTvToUniform {
        value: f64,
    },
    ExactEntropy {
        value: f64,
    },
    ExactSupport {
        value: usize,
    },
    /// TV distance to uniform equal to `alpha * heads / (2 k)`.
    ExactTvFormula {
        alpha: f64,
        heads: usize,
        k: usize,
    },
}

impl Certificate {
    /// The certified number, as a float.
    pub fn value(&self) -> f64 {
        match *self {
            Certificate::ExactTvToUniform { value } | Certificate::ExactEntropy { value } => value,
            Certificate::ExactSupport { value } => value as f64,
            Certificate::ExactTvFormula { alpha, heads, k } => {
                alpha * heads as f64 / (2 * k) as f64
            }
        }
    }

    /// The same quantity recomputed by the brute-force oracle on `d`.
    pub fn brute_force(&self, d: &ExplicitDistribution) -> f64 {
        match self {
            Certificate::ExactTvToUniform { .. } | Certificate::ExactTvFormula { .. } => {
                let u = ExplicitDistribution::uniform(d.n()).expect("n >= 1");
                tv_distance(d, &u).expect("same domain")
            }
            Certificate::ExactEntropy { .. } => entropy_exact(d),
            Certificate::ExactSupport { .. } => support_size_exact(d, 1.0 / d.n() as f64) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub distribution: ExplicitDistribution,
    pub certificate: Certificate,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    family: String,
    params: BTreeMap<String, f64>,
    seed: Option<u64>,
    certificate: Certificate,
}

impl HardInstance {
    /// `|certificate - brute force|`.
    pub fn certificate_error(&self) -> f64 {
        (self.certificate.value() - self.certificate.brute_force(&self.distribution)).abs()
    }

    /// Writes the distribution as JSON to `path` and the provenance sidecar
    /// `{family, params, seed, certificate}` next to it as `<stem>.meta.json`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.distribution.write_json(path)?;
        let sidecar = Sidecar {
            family: self.provenance.family.clone(),
            params: self.provenance.params.clone(),
            seed: self.provenance.seed,
            certificate: self.certificate.clone(),
        };
        fs::write(
            sidecar_path(path),
            serde_json::to_string_pretty(&sidecar)? + "\n",
        )?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let distribution = ExplicitDistribution::read_json(path)?;
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        Ok(HardInstance {
            distribution,
            certificate: sidecar.certificate,
            provenance: Provenance {
                family: sidecar.family,
                params: sidecar.params,
                seed: sidecar.seed,
            },
        })
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance");
    path.with_file_name(format!("{stem}.meta.json"))
}

fn provenance(family: &str, params: &[(&str, f64)], seed: Option<u64>) -> Provenance {
    Provenance {
        family: family.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        seed,
    }
}

/// How the per-pair coins of the bucket constructions are decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coins {
    Bernoulli { p: f64, seed: u64 },
    AllHeads,
    AllTails,
}

impl Coins {
    fn toss(self, count: usize) -> Vec<bool> {
        match self {
            Coins::AllHeads => vec![true; count],
            Coins::AllTails => vec![false; count],
            Coins::Bernoulli { p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count).map(|_| rng.random_bool(p)).collect()
            }
        }
    }

    fn seed(self) -> Option<u64> {
        match self {
            Coins::Bernoulli { seed, .. } => Some(seed),
            _ => None,
        }
    }

    fn p(self) -> f64 {
        match self {
            Coins::Bernoulli { p, .. } => p,
            Coins::AllHeads => 1.0,
            Coins::AllTails => 0.0,
        }
    }
}

/// Size of the zero block: `eps * n` rounded to the nearest integer, at least 1.
pub fn uniformity_lb_block(n: usize, epsilon: f64) -> usize {
    ((epsilon * n as f64).round() as usize).max(1)
}

/// Heavy point of mass `eps' + 1/n`, then `round(eps n)` zeros, then `1/n`
/// everywhere else, all shifted cyclically by `r`. `eps' = round(eps n)/n`.
pub fn gen_uniformity_lb(n: usize, epsilon: f64, r: usize) -> Result<HardInstance> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} not in (0, 1/2]"),
        ));
    }
    if (n as f64) * epsilon < 1.0 {
        return Err(Error::param("n", format!("{n} < 1/epsilon")));
    }
    let block = uniformity_lb_block(n, epsilon);
    if block + 1 >= n {
        return Err(Error::param(
            "n",
            format!("{n} too small for a block of {block}"),
        ));
    }
    let flat_points = n - block - 1;
    if r >= flat_points {
        return Err(Error::param("r", format!("{r} not below {flat_points}")));
    }
    let nf = n as f64;
    let eps_rounded = block as f64 / nf;
    let mut base = vec![1.0 / nf; n];
    base[0] = eps_rounded + 1.0 / nf;
    base[1..=block].fill(0.0);
    let mut pmf = vec![0.0; n];
    for (i, p) in base.into_iter().enumerate() {
        pmf[(i + r) % n] = p;
    }
    Ok(HardInstance {
        distribution: ExplicitDistribution::new(pmf)?,
        certificate: Certificate::ExactTvToUniform { value: eps_rounded },
        provenance: provenance(
            "uniformity-lb",
            &[("n", nf), ("epsilon", epsilon), ("r", r as f64)],
            None,
        ),
    })
}

/// Random partition of `[n]` into `2k` equal buckets `A_1..A_k, B_1..B_k`;
/// on heads for pair `j`, points of `A_j` get `(1+alpha)/n` and points of
/// `B_j` get `(1-alpha)/n`, otherwise both stay at `1/n`.
pub fn gen_tolerant_lb(
    n: usize,
    k: usize,
    alpha: f64,
    coins: Coins,
    partition_seed: u64,
) -> Result<HardInstance> {
    if k == 0 || !n.is_multiple_of(2 * k) {
        return Err(Error::param(
            "k",
            format!("n = {n} not divisible by 2k = {}", 2 * k),
        ));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("{alpha} not in (0, 1]")));
    }
    if let Coins::Bernoulli { p, .. } = coins {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", format!("{p} not in (0, 1)")));
        }
    }
    let bucket = n / (2 * k);
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(&mut ChaCha8Rng::seed_from_u64(partition_seed));
    let heads = coins.toss(k);
    let nf = n as f64;
    let mut pmf = vec![1.0 / nf; n];
    for (j, &head) in heads.iter().enumerate() {
        if head {
            let a = &points[j * bucket..(j + 1) * bucket];
            let b = &points[(k + j) * bucket..(k + j + 1) * bucket];
            for &x in a {
                pmf[x] = (1.0 + alpha) / nf;
            }
            for &y in b {
                pmf[y] = (1.0 - alpha) / nf;
            }
        }
    }
    let heads = heads.iter().filter(|&&h| h).count();
    Ok(HardInstance {
        distribution: ExplicitDistribution::new(pmf)?,
        certificate: Certificate::ExactTvFormula { alpha, heads, k },
        provenance: provenance(
            "tolerant-lb",
            &[
                ("n", nf),
                ("k", k as f64),
                ("alpha", alpha),
                ("p", coins.p()),
            ],
            coins.seed().map(|s| s ^ partition_seed.rotate_left(32)),
        ),
    })
}

/// The coin biases of the two tolerant lower-bound families for a given `eps`.
pub fn tolerant_lb_presets(epsilon: f64) -> (f64, f64) {
    ((1.0 + epsilon) / 2.0, (1.0 + 20.0 * epsilon) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyFamily {
    /// `log2 n` support points besides the heavy one.
    Sparse,
    /// `n^(1/4) log2 n` support points besides the heavy one.
    Wide,
}

/// `(n^(1/4), log2 n)` when `n = 2^(4j)` for some `j >= 1`.
pub fn entropy_lb_shape(n: usize) -> Result<(usize, usize)> {
    if !n.is_power_of_two() || n < 16 {
        return Err(Error::param("n", format!("{n} is not 2^(4j), j >= 1")));
    }
    let log_n = n.trailing_zeros() as usize;
    if !log_n.is_multiple_of(4) {
        return Err(Error::param("n", format!("{n} is not 2^(4j), j >= 1")));
    }
    Ok((1 << (log_n / 4), log_n))
}

/// Heavy point `D(1) = 1 - 1/log2 n`; the remaining `1/log2 n` spread evenly
/// over a uniformly random subset `S` of `{2, ..., n}`.
pub fn gen_entropy_lb(n: usize, family: EntropyFamily, seed: u64) -> Result<HardInstance> {
    let (k_n, log_n) = entropy_lb_shape(n)?;
    let gamma = 1.0 / log_n as f64;
    let support = match family {
        EntropyFamily::Sparse => log_n,
        EntropyFamily::Wide => k_n * log_n,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pmf = vec![0.0; n];
    pmf[0] = 1.0 - gamma;
    let each = gamma / support as f64;
    for i in index::sample(&mut rng, n - 1, support) {
        pmf[i + 1] = each;
    }
    let entropy = -(1.0 - gamma) * (1.0 - gamma).log2() + gamma * (support as f64 / gamma).log2();
    let family_name = match family {
        EntropyFamily::Sparse => "entropy-lb-sparse",
        EntropyFamily::Wide => "entropy-lb-wide",
    };
    Ok(HardInstance {
        distribution: ExplicitDistribution::new(pmf)?,
        certificate: Certificate::ExactEntropy { value: entropy },
        provenance: provenance(family_name, &[("n", n as f64)], Some(seed)),
    })
}

/// For `i` in `[n/2]`, `D(i) = (1 + X_i)/n` and `D(n+1-i) = (1 - X_i)/n`.
pub fn gen_support_lb(n: usize, coins: Coins) -> Result<HardInstance> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::param("n", format!("{n} must be even and positive")));
    }
    if let Coins::Bernoulli { p, .. } = coins {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} not in [0, 1]")));
        }
    }
    let half = n / 2;
    let nf = n as f64;
    let flips = coins.toss(half);
    let mut pmf = vec![0.0; n];
    for (i, &x) in flips.iter().enumerate() {
        let x = if x { 1.0 } else { 0.0 };
        pmf[i] = (1.0 + x) / nf;
        pmf[n - 1 - i] = (1.0 - x) / nf;
    }
    let heads = flips.iter().filter(|&&h| h).count();
    Ok(HardInstance {
        distribution: ExplicitDistribution::new(pmf)?,
        certificate: Certificate::ExactSupport { value: n - heads },
        provenance: provenance("support-lb", &[("n", nf), ("p", coins.p())], coins.seed()),
    })
}
