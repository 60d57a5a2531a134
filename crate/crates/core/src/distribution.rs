//! Explicit finite distributions over `[n] = {1, ..., n}` and the exact
//! (linear-time) quantities every sublinear algorithm is checked against.
//!
//! All public indices are 1-based. Logarithms are base 2 throughout the crate.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(pmf) == 1` accepted at construction.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Cumulative masses `D([j]) = D(1) + ... + D(j)` for `j = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixCdf {
    cdf: Vec<f64>,
}

impl PrefixCdf {
    fn from_pmf(pmf: &[f64]) -> Self {
        let cdf = pmf
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        PrefixCdf { cdf }
    }

    pub fn n(&self) -> usize {
        self.cdf.len()
    }

    /// `D([j])`, with `D([0]) = 0`. Panics if `j > n`.
    pub fn at(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.cdf[j - 1]
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.cdf
    }

    /// Inverse-CDF lookup: the smallest `j` with `D([j]) > u`, for `u` in
    /// `[0, D([n]))`. Points of zero mass are never returned.
    pub fn inverse(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) + 1
    }
}

/// A probability mass function over `[n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionFile", into = "DistributionFile")]
pub struct ExplicitDistribution {
    pmf: Vec<f64>,
    cdf: PrefixCdf,
}

/// On-disk JSON shape: `{"n": <int>, "pmf": [<n doubles>]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistributionFile {
    n: usize,
    pmf: Vec<f64>,
}

impl TryFrom<DistributionFile> for ExplicitDistribution {
    type Error = Error;

    fn try_from(file: DistributionFile) -> Result<Self> {
        if file.n != file.pmf.len() {
            return Err(Error::InvalidDistribution(format!(
                "declared n = {} but pmf has {} entries",
                file.n,
                file.pmf.len()
            )));
        }
        ExplicitDistribution::new(file.pmf)
    }
}

impl From<ExplicitDistribution> for DistributionFile {
    fn from(d: ExplicitDistribution) -> Self {
        DistributionFile {
            n: d.n(),
            pmf: d.pmf,
        }
    }
}

impl ExplicitDistribution {
    /// Validates `pmf` (finite, nonnegative, sums to 1 within
    /// [`NORMALIZATION_TOLERANCE`]) without renormalizing it.
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidDistribution("empty domain".into()));
        }
        if let Some((i, p)) = pmf
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {} is {p}",
                i + 1
            )));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        let cdf = PrefixCdf::from_pmf(&pmf);
        Ok(ExplicitDistribution { pmf, cdf })
    }

    /// Builds a distribution from arbitrary nonnegative weights, dividing by
    /// their sum. This is the only constructor that renormalizes.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty domain".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Uniform over the first `k` points of `[n]`.
    pub fn uniform_prefix(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::param("k", format!("{k} not in [1, {n}]")));
        }
        let mut pmf = vec![0.0; n];
        pmf[..k].fill(1.0 / k as f64);
        Self::new(pmf)
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at == 0 || at > n {
            return Err(Error::OutOfDomain { index: at, n });
        }
        let mut pmf = vec![0.0; n];
        pmf[at - 1] = 1.0;
        Self::new(pmf)
    }

    /// Random pmf with i.i.d. Exp(1) weights (a flat Dirichlet draw).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let weights = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        Self::from_weights(weights)
    }

    /// A random pmf sorted into nonincreasing order.
    pub fn random_monotone<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::random(n, rng)?.sorted_nonincreasing())
    }

    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self) -> &PrefixCdf {
        &self.cdf
    }

    /// `D(i)` for `i` in `[n]`.
    pub fn mass(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.pmf[i - 1])
    }

    /// `D([j])` for `j` in `[n]`.
    pub fn cumulative(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok(self.cdf.at(j))
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            Err(Error::OutOfDomain {
                index: i,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }

    /// One inverse-CDF draw, 1-based.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cdf.at(self.n());
        self.cdf.inverse(rng.random::<f64>() * total)
    }

    /// The same multiset of masses rearranged in nonincreasing order.
    pub fn sorted_nonincreasing(&self) -> Self {
        let mut pmf = self.pmf.clone();
        pmf.sort_by(|a, b| b.total_cmp(a));
        let cdf = PrefixCdf::from_pmf(&pmf);
        ExplicitDistribution { pmf, cdf }
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        serde_json::from_reader(reader).map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut writer, self)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }

    /// Binary layout: `n` as u64 little-endian, then `n` f64 little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.n());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for p in &self.pmf {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, body) = bytes
            .split_first_chunk::<8>()
            .ok_or_else(|| Error::InvalidDistribution("missing length header".into()))?;
        let n = u64::from_le_bytes(*header) as usize;
        if body.len() != n.saturating_mul(8) {
            return Err(Error::InvalidDistribution(format!(
                "header says {n} entries, body holds {} bytes",
                body.len()
            )));
        }
        let pmf = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(pmf)
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes).map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// Reads JSON or the binary layout, chosen by extension (`.bin` is binary).
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Self::read_binary(path),
            _ => Self::read_json(path),
        }
    }
}

fn check_same_domain(d1: &ExplicitDistribution, d2: &ExplicitDistribution) -> Result<()> {
    if d1.n() != d2.n() {
        Err(Error::DomainMismatch {
            left: d1.n(),
            right: d2.n(),
        })
    } else {
        Ok(())
    }
}

/// Total variation distance `(1/2) * sum_i |D1(i) - D2(i)|`.
pub fn tv_distance(d1: &ExplicitDistribution, d2: &ExplicitDistribution) -> Result<f64> {
    check_same_domain(d1, d2)?;
    let l1: f64 = d1.pmf.iter().zip(&d2.pmf).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}

/// Shannon entropy in bits, with `0 log(1/0) = 0`.
pub fn entropy_exact(d: &ExplicitDistribution) -> f64 {
    d.pmf
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Number of points carrying mass at least `threshold`.
pub fn support_size_exact(d: &ExplicitDistribution, threshold: f64) -> usize {
    d.pmf.iter().filter(|&&p| p >= threshold).count()
}

pub fn is_monotone_nonincreasing(d: &ExplicitDistribution) -> bool {
    d.pmf.windows(2).all(|w| w[0] >= w[1])
}

/// Binary entropy `h2(p)` in bits; `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Upper bound on `|H(D1) - H(D2)|` for distributions on `[n]` at TV
/// distance at most `alpha`: `alpha * log2(n - 1) + h2(alpha)`.
pub fn entropy_diff_bound(alpha: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} not in [0, 1]")));
    }
    if n < 2 {
        return Err(Error::param("n", format!("{n} < 2")));
    }
    Ok(alpha * ((n - 1) as f64).log2() + binary_entropy(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(pmf: &[f64]) -> ExplicitDistribution {
        ExplicitDistribution::new(pmf.to_vec()).unwrap()
    }

    /// max over all events S of D1(S) - D2(S), by enumerating 2^n subsets.
    fn tv_by_subsets(d1: &ExplicitDistribution, d2: &ExplicitDistribution) -> f64 {
        let n = d1.n();
        (0u32..(1 << n))
            .map(|mask| {
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| d1.pmf()[i] - d2.pmf()[i])
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ExplicitDistribution::new(vec![]).is_err());
        assert!(ExplicitDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ExplicitDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(ExplicitDistribution::new(vec![f64::NAN, 1.0]).is_err());
        // within tolerance, kept as is
        let d = ExplicitDistribution::new(vec![0.5, 0.5 + 1e-10]).unwrap();
        assert_eq!(d.pmf()[1], 0.5 + 1e-10);
        let d = ExplicitDistribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.pmf(), &[0.25, 0.75]);
    }

    #[test]
    fn tv_examples() {
        let u8 = ExplicitDistribution::uniform(8).unwrap();
        assert_eq!(tv_distance(&u8, &u8).unwrap(), 0.0);
        let d_r = dist(&[3.0 / 8.0, 0.0, 0.0, 0.125, 0.125, 0.125, 0.125, 0.125]);
        assert!((tv_distance(&u8, &d_r).unwrap() - 0.25).abs() < 1e-15);
        let u7 = ExplicitDistribution::uniform(7).unwrap();
        assert!(matches!(
            tv_distance(&u8, &u7),
            Err(Error::DomainMismatch { left: 8, right: 7 })
        ));
    }

    #[test]
    fn tv_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 6, 9, 12] {
            for _ in 0..5 {
                let d1 = ExplicitDistribution::random(n, &mut rng).unwrap();
                let d2 = ExplicitDistribution::random(n, &mut rng).unwrap();
                let brute = tv_by_subsets(&d1, &d2);
                assert!((tv_distance(&d1, &d2).unwrap() - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(
            entropy_exact(&ExplicitDistribution::uniform(8).unwrap()),
            3.0
        );
        assert_eq!(
            entropy_exact(&ExplicitDistribution::point_mass(5, 1).unwrap()),
            0.0
        );
        assert_eq!(entropy_exact(&dist(&[0.5, 0.25, 0.25])), 1.5);
    }

    #[test]
    fn support_examples() {
        let n = 10;
        let u = ExplicitDistribution::uniform(n).unwrap();
        assert_eq!(support_size_exact(&u, 1.0 / n as f64), n);
        let p = ExplicitDistribution::point_mass(n, 4).unwrap();
        assert_eq!(support_size_exact(&p, 1.0 / n as f64), 1);
        let half = ExplicitDistribution::uniform_prefix(n, n / 2).unwrap();
        assert_eq!(support_size_exact(&half, 1.0 / n as f64), n / 2);
    }

    #[test]
    fn monotone_examples() {
        assert!(is_monotone_nonincreasing(
            &ExplicitDistribution::uniform(5).unwrap()
        ));
        assert!(is_monotone_nonincreasing(&dist(&[0.5, 0.3, 0.2])));
        assert!(!is_monotone_nonincreasing(&dist(&[0.2, 0.5, 0.3])));
    }

    #[test]
    fn entropy_bound_examples() {
        assert_eq!(entropy_diff_bound(0.0, 10).unwrap(), 0.0);
        assert!((entropy_diff_bound(0.5, 17).unwrap() - 3.0).abs() < 1e-15);
        assert!(entropy_diff_bound(1.5, 17).is_err());
        assert!(entropy_diff_bound(-0.1, 17).is_err());
        assert!(entropy_diff_bound(0.5, 1).is_err());
    }

    #[test]
    fn entropy_bound_holds_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let d1 = ExplicitDistribution::random(64, &mut rng).unwrap();
            // mix in sparse and point-heavy instances as well
            let d2 = match trial % 3 {
                0 => ExplicitDistribution::random(64, &mut rng).unwrap(),
                1 => ExplicitDistribution::point_mass(64, 1 + trial % 64).unwrap(),
                _ => ExplicitDistribution::uniform_prefix(64, 1 + trial % 64).unwrap(),
            };
            let tv = tv_distance(&d1, &d2).unwrap();
            let gap = (entropy_exact(&d1) - entropy_exact(&d2)).abs();
            assert!(gap <= entropy_diff_bound(tv, 64).unwrap() + 1e-12);
        }
    }

    #[test]
    fn prefix_cdf_matches_pmf() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = ExplicitDistribution::random(500, &mut rng).unwrap();
        let cdf = d.cdf();
        assert!((cdf.at(500) - 1.0).abs() < 1e-9);
        for j in 1..=500 {
            assert!(cdf.at(j) >= cdf.at(j - 1));
            assert!((cdf.at(j) - cdf.at(j - 1) - d.pmf()[j - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_skips_zero_mass() {
        let d = dist(&[0.0, 0.5, 0.0, 0.5, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            assert!(x == 2 || x == 4);
        }
        assert_eq!(d.cdf().inverse(0.0), 2);
        assert_eq!(d.cdf().inverse(0.5), 4);
    }

    #[test]
    fn file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let d = dist(&[0.125, 0.375, 0.5]);
        let json = dir.path().join("d.json");
        d.write_json(&json).unwrap();
        let text = std::fs::read_to_string(&json).unwrap();
        assert_eq!(text.trim(), r#"{"n":3,"pmf":[0.125,0.375,0.5]}"#);
        assert_eq!(ExplicitDistribution::read_file(&json).unwrap(), d);

        let bin = dir.path().join("d.bin");
        d.write_binary(&bin).unwrap();
        let bytes = std::fs::read(&bin).unwrap();
        assert_eq!(bytes.len(), 8 + 3 * 8);
        assert_eq!(&bytes[..8], &3u64.to_le_bytes());
        assert_eq!(ExplicitDistribution::read_file(&bin).unwrap(), d);

        assert!(serde_json::from_str::<ExplicitDistribution>(r#"{"n":2,"pmf":[1.0]}"#).is_err());
        assert!(ExplicitDistribution::from_bytes(&[1, 0, 0]).is_err());
    }

    fn arb_dist(max_n: usize) -> impl Strategy<Value = ExplicitDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..=max_n).prop_filter_map("zero weights", |w| {
            ExplicitDistribution::from_weights(w).ok()
        })
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(
            (a, b, c) in (1usize..64).prop_flat_map(|n| {
                let w = prop::collection::vec(0.01f64..1.0, n);
                (w.clone(), w.clone(), w)
            })
        ) {
            let a = ExplicitDistribution::from_weights(a).unwrap();
            let b = ExplicitDistribution::from_weights(b).unwrap();
            let c = ExplicitDistribution::from_weights(c).unwrap();
            let ab = tv_distance(&a, &b).unwrap();
            prop_assert!((ab - tv_distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ab <= tv_distance(&a, &c).unwrap() + tv_distance(&c, &b).unwrap() + 1e-12);
        }

        #[test]
        fn entropy_in_range(d in arb_dist(64)) {
            let h = entropy_exact(&d);
            let max = (d.n() as f64).log2();
            prop_assert!(h >= 0.0 && h <= max + 1e-9);
            let far_from_uniform = d.pmf().iter().any(|&p| (p - 1.0 / d.n() as f64).abs() > 1e-3);
            if far_from_uniform {
                prop_assert!(h < max - 1e-12);
            }
        }

        #[test]
        fn binary_round_trip(d in arb_dist(40)) {
            prop_assert_eq!(ExplicitDistribution::from_bytes(&d.to_bytes()).unwrap(), d);
        }
    }

    #[test]
    fn uniform_attains_max_entropy() {
        for n in [1, 2, 3, 17, 64, 1000] {
            let h = entropy_exact(&ExplicitDistribution::uniform(n).unwrap());
            assert!((h - (n as f64).log2()).abs() < 1e-9);
        }
    }
}
