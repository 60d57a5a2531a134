use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distribution::ExplicitDistribution;
use crate::error::{Error, Result};
use crate::oracle::CumulativeDualOracle;

/// A partition of `[n]` into consecutive intervals of nondecreasing length,
/// chosen without looking at any distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousDecomposition {
    pub n: usize,
    pub epsilon: f64,
    /// 1-based inclusive `(start, end)` pairs.
    pub intervals: Vec<(usize, usize)>,
}

/// Worst flattening error over monotone distributions caused by a single
/// interval of length `s` starting at `a`.
///
/// TV to the flattening is convex in `D`, so the maximum over monotone
/// distributions sits at a uniform prefix `U_[c]`. If the prefix ends `j`
/// points into the interval the error is `j (s - j) / (s c)`, maximised near
/// `j = sqrt(c'^2 + s c') - c'` with `c' = a - 1`.
pub fn interval_flattening_error(a: usize, s: usize) -> f64 {
    if s < 2 {
        return 0.0;
    }
    let c0 = (a - 1) as f64;
    let sf = s as f64;
    let stationary = if a == 1 {
        sf - 1.0
    } else {
        (c0 * c0 + sf * c0).sqrt() - c0
    };
    let clamp = |j: f64| j.clamp(1.0, sf - 1.0);
    [
        clamp(stationary.floor()),
        clamp(stationary.ceil()),
        1.0,
        sf - 1.0,
    ]
    .into_iter()
    .map(|j| j * (sf - j) / (sf * (c0 + j)))
    .fold(0.0, f64::max)
}

/// Largest length `s <= cap` starting at `a` whose worst error is at most `eps`.
fn largest_admissible(a: usize, eps: f64, cap: usize) -> usize {
    let (mut lo, mut hi) = (1, cap);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if interval_flattening_error(a, mid) <= eps {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// `ceil(((1+eps)^k - 1) / eps)`, the geometric boundary sequence.
fn geometric_boundary(k: usize, eps: f64) -> f64 {
    (((1.0 + eps).powi(k as i32) - 1.0) / eps - 1e-9).ceil()
}

/// Builds the decomposition. Interval `k` gets the geometric length
/// `b_k - b_{k-1}` with `b_k = ceil(((1+eps)^k - 1)/eps)`, capped so that
/// its worst flattening error stays at most `eps`, and kept between the
/// previous length and `(1+eps)` times it plus one. A short final interval is
/// merged backwards by spreading the tail evenly until lengths are
/// nondecreasing again.
pub fn birge_decomposition(n: usize, epsilon: f64) -> Result<ObliviousDecomposition> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} must be positive"),
        ));
    }
    let mut sizes: Vec<usize> = Vec::new();
    let mut covered = 0;
    while covered < n {
        let k = sizes.len() + 1;
        let geometric =
            (geometric_boundary(k, epsilon) - geometric_boundary(k - 1, epsilon)).max(1.0);
        let admissible = largest_admissible(covered + 1, epsilon, n - covered);
        let mut t = admissible.min(geometric.min(n as f64) as usize);
        if let Some(&prev) = sizes.last() {
            let grown = ((1.0 + epsilon) * prev as f64).floor() as usize + 1;
            t = prev.max(t.min(grown));
        }
        sizes.push(t);
        covered += t;
    }
    *sizes.last_mut().expect("n >= 1") -= covered - n;
    balance_tail(&mut sizes);

    let mut intervals = Vec::with_capacity(sizes.len());
    let mut start = 1;
    for s in sizes {
        intervals.push((start, start + s - 1));
        start += s;
    }
    Ok(ObliviousDecomposition {
        n,
        epsilon,
        intervals,
    })
}

fn balance_tail(sizes: &mut [usize]) {
    let len = sizes.len();
    let mut j = 1;
    while j < len {
        let total: usize = sizes[len - j..].iter().sum();
        if total / j >= sizes[len - j - 1] {
            break;
        }
        j += 1;
    }
    let total: usize = sizes[len - j..].iter().sum();
    let (q, r) = (total / j, total % j);
    for (i, s) in sizes[len - j..].iter_mut().enumerate() {
        *s = if i < j - r { q } else { q + 1 };
    }
}

impl ObliviousDecomposition {
    /// Validates a list of 1-based inclusive intervals covering `[n]`.
    pub fn from_intervals(epsilon: f64, intervals: Vec<(usize, usize)>) -> Result<Self> {
        let mut next = 1;
        for &(a, b) in &intervals {
            if a != next || b < a {
                return Err(Error::param(
                    "intervals",
                    format!("interval [{a}, {b}] does not start at {next}"),
                ));
            }
            next = b + 1;
        }
        if intervals.is_empty() {
            return Err(Error::param("intervals", "empty partition"));
        }
        Ok(ObliviousDecomposition {
            n: next - 1,
            epsilon,
            intervals,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.intervals.iter().map(|&(a, b)| b - a + 1).collect()
    }

    /// Length of interval `k` (1-based).
    pub fn size(&self, k: usize) -> usize {
        let (a, b) = self.intervals[k - 1];
        b - a + 1
    }

    /// 1-based index of the interval containing point `x`.
    pub fn interval_of(&self, x: usize) -> usize {
        self.intervals.partition_point(|&(_, end)| end < x) + 1
    }

    /// `ceil(ln(eps n + 1) / ln(1 + eps)) + 1`.
    pub fn count_bound(n: usize, epsilon: f64) -> usize {
        ((epsilon * n as f64 + 1.0).ln() / (1.0 + epsilon).ln()).ceil() as usize + 1
    }

    /// Worst flattening error over all monotone distributions on `[n]`.
    pub fn worst_flattening_error(&self) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| interval_flattening_error(a, b - a + 1))
            .fold(0.0, f64::max)
    }

    /// JSON list of `[start, end]` pairs.
    pub fn to_pairs_json(&self) -> String {
        serde_json::to_string(&self.intervals).expect("pairs serialize")
    }

    pub fn from_pairs_json(epsilon: f64, text: &str) -> Result<Self> {
        Self::from_intervals(epsilon, serde_json::from_str(text)?)
    }

    pub fn write_pairs(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_pairs_json() + "\n")?;
        Ok(())
    }
}

/// Interval masses of `D` over a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenedDistribution {
    pub decomposition: ObliviousDecomposition,
    pub interval_masses: Vec<f64>,
}

pub fn flatten(
    d: &ExplicitDistribution,
    dec: &ObliviousDecomposition,
) -> Result<FlattenedDistribution> {
    if d.n() != dec.n {
        return Err(Error::DomainMismatch {
            left: d.n(),
            right: dec.n,
        });
    }
    let pmf = d.pmf();
    let interval_masses = dec
        .intervals
        .iter()
        .map(|&(a, b)| pmf[a - 1..b].iter().sum())
        .collect();
    Ok(FlattenedDistribution {
        decomposition: dec.clone(),
        interval_masses,
    })
}

impl FlattenedDistribution {
    /// The pmf spreading each interval's mass evenly over its points.
    pub fn to_distribution(&self) -> Result<ExplicitDistribution> {
        let mut pmf = Vec::with_capacity(self.decomposition.n);
        for (&(a, b), &mass) in self
            .decomposition
            .intervals
            .iter()
            .zip(&self.interval_masses)
        {
            let s = b - a + 1;
            pmf.extend(std::iter::repeat_n(mass / s as f64, s));
        }
        ExplicitDistribution::new(pmf)
    }

    /// `sum_k D(I_k) log2(|I_k| / D(I_k))`.
    pub fn entropy(&self) -> f64 {
        self.decomposition
            .sizes()
            .into_iter()
            .zip(&self.interval_masses)
            .filter(|&(_, &m)| m > 0.0)
            .map(|(s, &m)| m * (s as f64 / m).log2())
            .sum::<f64>()
            .max(0.0)
    }
}

/// Interval-level SAMP and mass access to the flattening of the hidden
/// distribution, simulated from SAMP and CEVAL.
pub struct FlattenedOracle<'a> {
    oracle: &'a mut CumulativeDualOracle,
    dec: &'a ObliviousDecomposition,
}

impl<'a> FlattenedOracle<'a> {
    pub fn new(
        oracle: &'a mut CumulativeDualOracle,
        dec: &'a ObliviousDecomposition,
    ) -> Result<Self> {
        if oracle.is_noisy() {
            return Err(Error::NoisyOracle);
        }
        if oracle.n() != dec.n {
            return Err(Error::DomainMismatch {
                left: oracle.n(),
                right: dec.n,
            });
        }
        Ok(FlattenedOracle { oracle, dec })
    }

    pub fn decomposition(&self) -> &ObliviousDecomposition {
        self.dec
    }

    /// Index `k` with probability `D(I_k)`. One SAMP query.
    pub fn samp_interval(&mut self) -> usize {
        let x = self.oracle.samp();
        self.dec.interval_of(x)
    }

    /// `D(I_k)`. Two CEVAL queries, one for the first interval.
    pub fn mass_interval(&mut self, k: usize) -> Result<f64> {
        if k == 0 || k > self.dec.len() {
            return Err(Error::OutOfDomain {
                index: k,
                n: self.dec.len(),
            });
        }
        let (a, b) = self.dec.intervals[k - 1];
        let upper = self.oracle.ceval(b)?;
        let lower = if a == 1 {
            0.0
        } else {
            self.oracle.ceval(a - 1)?
        };
        Ok((upper - lower).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{entropy_diff_bound, entropy_exact, tv_distance};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(dec: &ObliviousDecomposition) {
        let sizes = dec.sizes();
        assert_eq!(dec.intervals.first().unwrap().0, 1);
        assert_eq!(dec.intervals.last().unwrap().1, dec.n);
        for w in dec.intervals.windows(2) {
            assert_eq!(w[0].1 + 1, w[1].0);
        }
        for w in sizes.windows(2) {
            assert!(w[0] <= w[1], "{sizes:?}");
            assert!(w[1] as f64 <= (1.0 + dec.epsilon) * w[0] as f64 + 1.0);
        }
        assert_eq!(sizes.iter().sum::<usize>(), dec.n);
    }

    #[test]
    fn examples() {
        for eps in [0.01, 1.0, 5.0] {
            assert_eq!(birge_decomposition(1, eps).unwrap().intervals, vec![(1, 1)]);
        }
        let d = birge_decomposition(15, 1.0).unwrap();
        assert_eq!(d.sizes(), vec![1, 2, 4, 8]);
        assert_eq!(
            d.intervals.iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![1, 3, 7, 15]
        );
        assert_eq!(
            birge_decomposition(10, 1.0).unwrap().sizes(),
            vec![1, 2, 3, 4]
        );
        let big = birge_decomposition(1_000_000, 0.1).unwrap();
        assert_eq!(ObliviousDecomposition::count_bound(1_000_000, 0.1), 122);
        assert!(big.len() <= 122);
        assert!(birge_decomposition(0, 0.1).is_err());
        assert!(birge_decomposition(10, 0.0).is_err());
    }

    #[test]
    fn grid_invariants() {
        for n in [10, 1_000, 1_000_000] {
            for eps in [1.0, 0.5, 0.1, 0.01] {
                let dec = birge_decomposition(n, eps).unwrap();
                check_invariants(&dec);
                assert!(
                    dec.len() <= ObliviousDecomposition::count_bound(n, eps),
                    "n={n} eps={eps}"
                );
                assert!(dec.worst_flattening_error() <= eps + 1e-12);
                assert_eq!(dec, birge_decomposition(n, eps).unwrap());
            }
        }
    }

    #[test]
    fn worst_error_matches_uniform_prefix_scan() {
        for (n, eps) in [(40, 0.3), (64, 0.1), (100, 0.5), (30, 1.0)] {
            let dec = birge_decomposition(n, eps).unwrap();
            let scan = (1..=n)
                .map(|c| {
                    let d = ExplicitDistribution::uniform_prefix(n, c).unwrap();
                    let f = flatten(&d, &dec).unwrap().to_distribution().unwrap();
                    tv_distance(&d, &f).unwrap()
                })
                .fold(0.0, f64::max);
            assert!((scan - dec.worst_flattening_error()).abs() < 1e-12);
        }
    }

    #[test]
    fn flattening_examples() {
        let dec = birge_decomposition(15, 1.0).unwrap();
        let u = ExplicitDistribution::uniform(15).unwrap();
        let f = flatten(&u, &dec).unwrap();
        for (m, want) in f.interval_masses.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert!((m - want / 15.0).abs() < 1e-15);
        }
        assert!(tv_distance(&f.to_distribution().unwrap(), &u).unwrap() < 1e-15);
        assert!(flatten(&ExplicitDistribution::uniform(14).unwrap(), &dec).is_err());
    }

    #[test]
    fn flattening_close_on_monotone_and_near_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for eps in [0.5, 0.1, 0.05] {
            let dec = birge_decomposition(2000, eps).unwrap();
            for _ in 0..20 {
                let d = ExplicitDistribution::random_monotone(2000, &mut rng).unwrap();
                let f = flatten(&d, &dec).unwrap();
                let fd = f.to_distribution().unwrap();
                assert!(tv_distance(&d, &fd).unwrap() <= eps + 1e-12);
                assert!((f.entropy() - entropy_exact(&fd)).abs() < 1e-9);
                let gap = (entropy_exact(&d) - entropy_exact(&fd)).abs();
                if eps <= 0.5 {
                    assert!(gap <= entropy_diff_bound(eps, 2000).unwrap() + 1e-9);
                }
            }
        }
    }

    #[test]
    fn flattened_oracle_behaviour() {
        let one = ObliviousDecomposition::from_intervals(0.1, vec![(1, 20)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = ExplicitDistribution::random(20, &mut rng).unwrap();
        let mut c = CumulativeDualOracle::new(d.clone(), 0);
        let mut f = FlattenedOracle::new(&mut c, &one).unwrap();
        assert_eq!(f.samp_interval(), 1);
        assert!((f.mass_interval(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(f.mass_interval(2).is_err());
        assert_eq!(c.stats().ceval_count, 1);

        let mut noisy = CumulativeDualOracle::new(d, 0).mark_noisy();
        assert!(matches!(
            FlattenedOracle::new(&mut noisy, &one),
            Err(Error::NoisyOracle)
        ));

        let dec = birge_decomposition(300, 0.2).unwrap();
        let d = ExplicitDistribution::random_monotone(300, &mut rng).unwrap();
        let truth = flatten(&d, &dec).unwrap();
        let mut c = CumulativeDualOracle::new(d, 5);
        let mut f = FlattenedOracle::new(&mut c, &dec).unwrap();
        let mut counts = vec![0usize; dec.len()];
        for _ in 0..100_000 {
            counts[f.samp_interval() - 1] += 1;
        }
        for k in 1..=dec.len() {
            let freq = counts[k - 1] as f64 / 100_000.0;
            assert!((freq - truth.interval_masses[k - 1]).abs() <= 0.01);
            assert!((f.mass_interval(k).unwrap() - truth.interval_masses[k - 1]).abs() < 1e-12);
        }
        assert_eq!(c.stats().samp_count, 100_000);
    }

    #[test]
    fn pairs_json_round_trip() {
        let dec = birge_decomposition(15, 1.0).unwrap();
        assert_eq!(dec.to_pairs_json(), "[[1,1],[2,3],[4,7],[8,15]]");
        assert_eq!(
            ObliviousDecomposition::from_pairs_json(1.0, &dec.to_pairs_json()).unwrap(),
            dec
        );
        assert!(ObliviousDecomposition::from_pairs_json(1.0, "[[1,2],[4,5]]").is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold(n in 1usize..3000, eps in 0.005f64..2.0) {
            let dec = birge_decomposition(n, eps).unwrap();
            check_invariants(&dec);
            prop_assert!(dec.worst_flattening_error() <= eps + 1e-12);
            for x in [1, n / 2 + 1, n] {
                let k = dec.interval_of(x);
                let (a, b) = dec.intervals[k - 1];
                prop_assert!(a <= x && x <= b);
            }
        }

        // the count bound needs eps n to be a bit above 1
        #[test]
        fn count_bound_holds(n in 2usize..5000, eps in 0.005f64..1.0) {
            prop_assume!(eps * n as f64 > 1.3);
            let dec = birge_decomposition(n, eps).unwrap();
            prop_assert!(dec.len() <= ObliviousDecomposition::count_bound(n, eps));
        }
    }

    #[test]
    fn near_monotone_flattening_within_three_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let eps = 0.1;
        let dec = birge_decomposition(500, eps).unwrap();
        for _ in 0..50 {
            let m = ExplicitDistribution::random_monotone(500, &mut rng).unwrap();
            let noise = ExplicitDistribution::random(500, &mut rng).unwrap();
            let w = rng.random_range(0.0..eps);
            let pmf = m
                .pmf()
                .iter()
                .zip(noise.pmf())
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect();
            let d = ExplicitDistribution::from_weights(pmf).unwrap();
            assert!(tv_distance(&d, &m).unwrap() <= eps);
            let fd = flatten(&d, &dec).unwrap().to_distribution().unwrap();
            assert!(tv_distance(&d, &fd).unwrap() <= 3.0 * eps);
        }
    }
}
