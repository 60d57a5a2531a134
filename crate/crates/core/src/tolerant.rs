//! Tolerant testers and TV-distance estimators.
//!
//! All estimators average a per-sample variable `X` in `[0, 1]` whose
//! expectation is exactly the TV distance. For a draw `s ~ D`,
//! `tv(D, D*) = E[(1 - D*(s)/D(s)) 1{D(s) > D*(s)}]`. The tolerant testers
//! use `m = ceil(ln 6 / (2 gamma^2))` draws with `gamma = (eps2 - eps1)/2`
//! and accept iff the estimate is at most `(eps1 + eps2)/2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ExplicitDistribution;
use crate::equivalence::{since, Verdict};
use crate::error::{Error, Result};
use crate::oracle::{DualOracle, QueryStats};

/// `ceil(ln 6 / (2 gamma^2))`: two-sided Hoeffding failure at most `1/3`.
pub fn tolerant_sample_size(gamma: f64) -> Result<u64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param("gamma", format!("{gamma} not in (0, 1]")));
    }
    Ok(((6f64.ln() / (2.0 * gamma * gamma)).ceil() as u64).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceParams {
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    pub m: u64,
}

impl ToleranceParams {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps1) {
            return Err(Error::param("eps1", format!("{eps1} not in [0, 1)")));
        }
        if !(eps2 > eps1 && eps2 <= 1.0) {
            return Err(Error::param("eps2", format!("{eps2} not in (eps1, 1]")));
        }
        let gamma = (eps2 - eps1) / 2.0;
        Ok(ToleranceParams {
            eps1,
            eps2,
            gamma,
            m: tolerant_sample_size(gamma)?,
        })
    }

    pub fn threshold(&self) -> f64 {
        (self.eps1 + self.eps2) / 2.0
    }

    fn verdict(&self, estimate: f64, stats: QueryStats) -> Verdict {
        if estimate <= self.threshold() {
            Verdict::accept(stats)
        } else {
            Verdict::reject(stats)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Estimate {
    pub value: f64,
    pub m: u64,
    pub stats: QueryStats,
}

/// `(1 - q/p) 1{p > q}`; `p` is the mass of the side the point was drawn from.
fn excess(p: f64, q: f64) -> f64 {
    if p > q {
        (1.0 - q / p).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn check_m(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::param("m", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_domains(left: usize, right: usize) -> Result<()> {
    if left != right {
        Err(Error::DomainMismatch { left, right })
    } else {
        Ok(())
    }
}

fn estimate_against(
    oracle: &mut DualOracle,
    m: u64,
    mut star: impl FnMut(usize) -> Result<f64>,
) -> Result<L1Estimate> {
    check_m(m)?;
    let start = oracle.stats();
    let mut sum = 0.0;
    for _ in 0..m {
        let s = oracle.samp();
        let p = oracle.eval(s)?;
        sum += excess(p, star(s)?);
    }
    Ok(L1Estimate {
        value: (sum / m as f64).clamp(0.0, 1.0),
        m,
        stats: since(start, oracle.stats()),
    })
}

/// Estimate of `tv(D, U_n)` from `m` SAMP draws with one EVAL each.
pub fn estimate_l1_to_uniform(oracle: &mut DualOracle, m: u64) -> Result<L1Estimate> {
    let u = 1.0 / oracle.n() as f64;
    estimate_against(oracle, m, |_| Ok(u))
}

pub fn estimate_l1_to_known(
    oracle: &mut DualOracle,
    d_star: &ExplicitDistribution,
    m: u64,
) -> Result<L1Estimate> {
    check_domains(oracle.n(), d_star.n())?;
    estimate_against(oracle, m, |s| d_star.mass(s))
}

/// Estimate of `tv(D1, D2)` from draws of `D1`, with one EVAL on each side
/// per draw. Stats are summed over both oracles.
pub fn estimate_l1_unknown_pair(
    o1: &mut DualOracle,
    o2: &mut DualOracle,
    m: u64,
) -> Result<L1Estimate> {
    check_domains(o1.n(), o2.n())?;
    let before = o2.stats();
    let mut est = estimate_against(o1, m, |s| o2.eval(s))?;
    est.stats = est.stats + since(before, o2.stats());
    Ok(est)
}

/// Estimate of `tv(D, U_n)` from EVAL queries only:
/// `E_{x ~ U}[(1 - n D(x)) 1{D(x) < 1/n}]`. The uniform points come from `rng`.
pub fn estimate_l1_eval_only<R: Rng + ?Sized>(
    oracle: &mut DualOracle,
    m: u64,
    rng: &mut R,
) -> Result<L1Estimate> {
    check_m(m)?;
    let n = oracle.n();
    let start = oracle.stats();
    let mut sum = 0.0;
    for _ in 0..m {
        let x = rng.random_range(1..=n);
        let scaled = n as f64 * oracle.eval(x)?;
        if scaled < 1.0 {
            sum += 1.0 - scaled;
        }
    }
    Ok(L1Estimate {
        value: (sum / m as f64).clamp(0.0, 1.0),
        m,
        stats: since(start, oracle.stats()),
    })
}

pub fn tolerant_test_uniformity(oracle: &mut DualOracle, eps1: f64, eps2: f64) -> Result<Verdict> {
    let params = ToleranceParams::new(eps1, eps2)?;
    let est = estimate_l1_to_uniform(oracle, params.m)?;
    Ok(params.verdict(est.value, est.stats))
}

pub fn tolerant_test_identity(
    oracle: &mut DualOracle,
    d_star: &ExplicitDistribution,
    eps1: f64,
    eps2: f64,
) -> Result<Verdict> {
    let params = ToleranceParams::new(eps1, eps2)?;
    let est = estimate_l1_to_known(oracle, d_star, params.m)?;
    Ok(params.verdict(est.value, est.stats))
}

pub fn tolerant_test_closeness(
    o1: &mut DualOracle,
    o2: &mut DualOracle,
    eps1: f64,
    eps2: f64,
) -> Result<Verdict> {
    let params = ToleranceParams::new(eps1, eps2)?;
    let est = estimate_l1_unknown_pair(o1, o2, params.m)?;
    Ok(params.verdict(est.value, est.stats))
}

/// Largest EVAL noise `tau` tolerated by [`tolerant_test_robust`].
pub fn robust_noise_budget(eps1: f64, eps2: f64) -> f64 {
    (eps2 - eps1) / 4.0
}

/// Largest per-oracle noise tolerated by [`tolerant_test_robust_pair`].
pub fn robust_pair_noise_budget(eps1: f64, eps2: f64) -> f64 {
    (eps2 - eps1) / 8.0
}

/// With ratio noise at most `bias`, each `X` moves by at most `bias`, so the
/// sample size is chosen for the remaining precision `gamma - bias`.
fn robust_sample_size(params: &ToleranceParams, bias: f64) -> Result<u64> {
    tolerant_sample_size(params.gamma - bias)
}

/// Tolerant identity tester that stays correct under multiplicative EVAL
/// noise up to [`robust_noise_budget`]. With an exact oracle it coincides
/// with [`tolerant_test_identity`].
pub fn tolerant_test_robust(
    oracle: &mut DualOracle,
    d_star: &ExplicitDistribution,
    eps1: f64,
    eps2: f64,
) -> Result<Verdict> {
    let params = ToleranceParams::new(eps1, eps2)?;
    let budget = robust_noise_budget(eps1, eps2);
    let noise = oracle.noise_tau();
    if noise > budget {
        return Err(Error::NoiseExceedsTolerance { noise, budget });
    }
    let m = robust_sample_size(&params, noise)?;
    let est = estimate_l1_to_known(oracle, d_star, m)?;
    Ok(params.verdict(est.value, est.stats))
}

/// Robust tolerant closeness tester; each oracle's noise must be within
/// [`robust_pair_noise_budget`].
pub fn tolerant_test_robust_pair(
    o1: &mut DualOracle,
    o2: &mut DualOracle,
    eps1: f64,
    eps2: f64,
) -> Result<Verdict> {
    let params = ToleranceParams::new(eps1, eps2)?;
    let budget = robust_pair_noise_budget(eps1, eps2);
    let noise = o1.noise_tau().max(o2.noise_tau());
    if noise > budget {
        return Err(Error::NoiseExceedsTolerance { noise, budget });
    }
    let bias = (1.0 + o1.noise_tau()) * (1.0 + o2.noise_tau()) - 1.0;
    let m = robust_sample_size(&params, bias)?;
    let est = estimate_l1_unknown_pair(o1, o2, m)?;
    Ok(params.verdict(est.value, est.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::tv_distance;
    use crate::hard_instances::{gen_tolerant_lb, gen_uniformity_lb, Coins};
    use crate::oracle::NoiseModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn far_half() -> ExplicitDistribution {
        gen_tolerant_lb(10_000, 100, 1.0, Coins::AllHeads, 3)
            .unwrap()
            .distribution
    }

    #[test]
    fn sample_size_example() {
        assert_eq!(tolerant_sample_size(0.1).unwrap(), 90);
        let p = ToleranceParams::new(0.1, 0.3).unwrap();
        assert!((p.gamma - 0.1).abs() < 1e-15);
        assert_eq!(p.m, 90);
        assert!(ToleranceParams::new(0.3, 0.1).is_err());
        assert!(ToleranceParams::new(-0.1, 0.3).is_err());
        assert!(ToleranceParams::new(0.1, 1.1).is_err());
        assert!(ToleranceParams::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn deterministic_cases() {
        let u = ExplicitDistribution::uniform(100).unwrap();
        let mut o = DualOracle::new(u.clone(), 1);
        assert_eq!(estimate_l1_to_uniform(&mut o, 500).unwrap().value, 0.0);
        let point = ExplicitDistribution::point_mass(100, 7).unwrap();
        let mut o = DualOracle::new(point.clone(), 1);
        assert!((estimate_l1_to_uniform(&mut o, 500).unwrap().value - 0.99).abs() < 1e-12);
        let mut o = DualOracle::new(u.clone(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            estimate_l1_eval_only(&mut o, 500, &mut rng).unwrap().value,
            0.0
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = ExplicitDistribution::random(100, &mut rng).unwrap();
        let mut o = DualOracle::new(d.clone(), 2);
        assert_eq!(estimate_l1_to_known(&mut o, &d, 300).unwrap().value, 0.0);
        let mut o1 = DualOracle::new(d.clone(), 3);
        let mut o2 = DualOracle::new(d.clone(), 4);
        assert_eq!(
            estimate_l1_unknown_pair(&mut o1, &mut o2, 300)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn known_uniform_reduces_to_uniform_estimator() {
        let d = gen_uniformity_lb(1000, 0.2, 11).unwrap().distribution;
        let u = ExplicitDistribution::uniform(1000).unwrap();
        for seed in 0..10 {
            let a = estimate_l1_to_uniform(&mut DualOracle::new(d.clone(), seed), 200).unwrap();
            let b = estimate_l1_to_known(&mut DualOracle::new(d.clone(), seed), &u, 200).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tolerant_uniformity_accounting_and_decisions() {
        let u = ExplicitDistribution::uniform(10_000).unwrap();
        for seed in 0..20 {
            let v =
                tolerant_test_uniformity(&mut DualOracle::new(u.clone(), seed), 0.1, 0.3).unwrap();
            assert!(v.accepted());
            assert_eq!((v.stats.samp_count, v.stats.eval_count), (90, 90));
        }
        let far = far_half();
        let rejects = (0..400)
            .filter(|&s| {
                !tolerant_test_uniformity(&mut DualOracle::new(far.clone(), s), 0.1, 0.3)
                    .unwrap()
                    .accepted()
            })
            .count();
        assert!(rejects as f64 / 400.0 >= 0.66);
    }

    #[test]
    fn threshold_is_inclusive() {
        let p = ToleranceParams::new(0.1, 0.3).unwrap();
        assert!(p.verdict(p.threshold(), QueryStats::default()).accepted());
        assert!(!p
            .verdict(p.threshold() + 1e-12, QueryStats::default())
            .accepted());
    }

    #[test]
    fn estimators_concentrate_on_certified_fixture() {
        let d = gen_uniformity_lb(10_000, 0.3, 77).unwrap().distribution;
        let u = ExplicitDistribution::uniform(10_000).unwrap();
        let mut inside = 0;
        let mut inside_pair = 0;
        for s in 0..400 {
            let v = estimate_l1_to_uniform(&mut DualOracle::new(d.clone(), s), 2000)
                .unwrap()
                .value;
            inside += (0.25..=0.35).contains(&v) as usize;
            let mut o1 = DualOracle::new(u.clone(), s);
            let mut o2 = DualOracle::new(d.clone(), s + 1);
            let v = estimate_l1_unknown_pair(&mut o1, &mut o2, 2000)
                .unwrap()
                .value;
            inside_pair += ((v - 0.3).abs() <= 0.05) as usize;
        }
        assert!(inside as f64 / 400.0 >= 0.95);
        assert!(inside_pair as f64 / 400.0 >= 0.95);
    }

    #[test]
    fn random_pairs_and_eval_only_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut good = 0;
        for s in 0..100 {
            let d = ExplicitDistribution::random(100, &mut rng).unwrap();
            let star = ExplicitDistribution::random(100, &mut rng).unwrap();
            let tv = tv_distance(&d, &star).unwrap();
            let v = estimate_l1_to_known(&mut DualOracle::new(d.clone(), s), &star, 5000)
                .unwrap()
                .value;
            good += ((v - tv).abs() <= 0.05) as usize;
            let samp = estimate_l1_to_uniform(&mut DualOracle::new(d.clone(), s), 5000).unwrap();
            let eval =
                estimate_l1_eval_only(&mut DualOracle::new(d.clone(), s), 5000, &mut rng).unwrap();
            assert!((samp.value - eval.value).abs() <= 0.05);
            assert_eq!(eval.stats.samp_count, 0);
            assert_eq!(eval.stats.eval_count, 5000);
        }
        assert!(good >= 95);
        let point = ExplicitDistribution::point_mass(100, 1).unwrap();
        let v = estimate_l1_eval_only(&mut DualOracle::new(point, 0), 5000, &mut rng)
            .unwrap()
            .value;
        assert!((v - 0.99).abs() <= 0.03);
    }

    #[test]
    fn expectation_identity_at_n50() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let d1 = ExplicitDistribution::random(50, &mut rng).unwrap();
        let d2 = ExplicitDistribution::random(50, &mut rng).unwrap();
        let tv = tv_distance(&d1, &d2).unwrap();
        let v = estimate_l1_unknown_pair(
            &mut DualOracle::new(d1, 1),
            &mut DualOracle::new(d2, 2),
            100_000,
        )
        .unwrap();
        assert!((v.value - tv).abs() <= 0.01);
        assert_eq!(v.stats.samp_count, 100_000);
        assert_eq!(v.stats.eval_count, 200_000);
    }

    #[test]
    fn robust_budget_and_degenerate_noise() {
        let u = ExplicitDistribution::uniform(1000).unwrap();
        let budget = robust_noise_budget(0.1, 0.3);
        assert!((budget - 0.05).abs() < 1e-15);
        let mut o = DualOracle::new(u.clone(), 0).with_noise(NoiseModel::random(0.06).unwrap());
        assert!(matches!(
            tolerant_test_robust(&mut o, &u, 0.1, 0.3),
            Err(Error::NoiseExceedsTolerance { .. })
        ));
        let far = far_half();
        for s in 0..20 {
            let a =
                tolerant_test_robust(&mut DualOracle::new(far.clone(), s), &u_of(&far), 0.1, 0.3)
                    .unwrap();
            let b =
                tolerant_test_uniformity(&mut DualOracle::new(far.clone(), s), 0.1, 0.3).unwrap();
            assert_eq!(a, b);
        }
    }

    fn u_of(d: &ExplicitDistribution) -> ExplicitDistribution {
        ExplicitDistribution::uniform(d.n()).unwrap()
    }

    #[test]
    fn robust_under_adversarial_noise() {
        let u = ExplicitDistribution::uniform(10_000).unwrap();
        let far = far_half();
        let tau = robust_noise_budget(0.1, 0.3);
        let mut accept = 0;
        let mut reject = 0;
        for s in 0..400 {
            let mut o = DualOracle::new(u.clone(), s).with_noise(NoiseModel::inflate(tau).unwrap());
            accept += tolerant_test_robust(&mut o, &u, 0.1, 0.3)
                .unwrap()
                .accepted() as usize;
            let mut o =
                DualOracle::new(far.clone(), s).with_noise(NoiseModel::deflate(tau).unwrap());
            reject += !tolerant_test_robust(&mut o, &u, 0.1, 0.3)
                .unwrap()
                .accepted() as usize;
        }
        assert!(accept as f64 / 400.0 >= 0.60);
        assert!(reject as f64 / 400.0 >= 0.60);
    }

    #[test]
    fn robust_pair_under_noise() {
        let u = ExplicitDistribution::uniform(10_000).unwrap();
        let far = far_half();
        let tau = robust_pair_noise_budget(0.1, 0.3);
        let mut reject = 0;
        for s in 0..200 {
            let mut o1 =
                DualOracle::new(far.clone(), s).with_noise(NoiseModel::deflate(tau).unwrap());
            let mut o2 =
                DualOracle::new(u.clone(), s + 1).with_noise(NoiseModel::inflate(tau).unwrap());
            reject += !tolerant_test_robust_pair(&mut o1, &mut o2, 0.1, 0.3)
                .unwrap()
                .accepted() as usize;
            let mut o1 =
                DualOracle::new(u.clone(), s).with_noise(NoiseModel::inflate(tau).unwrap());
            let mut o2 =
                DualOracle::new(u.clone(), s + 1).with_noise(NoiseModel::deflate(tau).unwrap());
            assert!(tolerant_test_robust_pair(&mut o1, &mut o2, 0.1, 0.3)
                .unwrap()
                .accepted());
        }
        assert!(reject as f64 / 200.0 >= 0.60);
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in 0..50 {
            let d = ExplicitDistribution::random(20, &mut rng).unwrap();
            let mut o = DualOracle::new(d.clone(), s).with_noise(NoiseModel::random(0.5).unwrap());
            let v = estimate_l1_to_uniform(&mut o, 50).unwrap().value;
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(estimate_l1_to_uniform(
            &mut DualOracle::new(u_of(&ExplicitDistribution::uniform(3).unwrap()), 0),
            0
        )
        .is_err());
    }
}
