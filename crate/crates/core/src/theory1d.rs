//! The univariate no-intercept setting with a known feature density.
//!
//! With the density known, the constraint set induced by all soft labelings
//! of unlimited unlabeled data collapses to an interval of slopes. Clipping
//! the supervised slope into that interval never increases the true risk,
//! because the risk is a convex parabola whose minimizer lies inside the
//! interval. This module computes the interval, the true risk, the clipped
//! estimator, and runs seeded sampling trials that certify both facts.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};

type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> (f64, f64) + Send + Sync>;

/// Moments of a known univariate feature/label distribution, plus a sampler
/// for drawing labeled pairs.
///
/// The stored quantities are exactly what the interval and risk formulas
/// consume: `E[X^2]`, the half-line first moments of the feature density,
/// `E[XY]` and `E[Y^2] = P(y=1)`.
#[derive(Clone)]
pub struct Distribution1D {
    ex2: f64,
    neg_xmean: f64,
    pos_xmean: f64,
    exy: f64,
    ey2: f64,
    sampler: Sampler,
}

impl std::fmt::Debug for Distribution1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Distribution1D")
            .field("ex2", &self.ex2)
            .field("neg_xmean", &self.neg_xmean)
            .field("pos_xmean", &self.pos_xmean)
            .field("exy", &self.exy)
            .field("ey2", &self.ey2)
            .finish()
    }
}

impl Distribution1D {
    pub fn new(
        ex2: f64,
        neg_xmean: f64,
        pos_xmean: f64,
        exy: f64,
        ey2: f64,
        sampler: Sampler,
    ) -> Result<Self> {
        if !(ex2.is_finite() && neg_xmean.is_finite() && pos_xmean.is_finite()
            && exy.is_finite() && ey2.is_finite())
        {
            return Err(Error::NonFinite("Distribution1D moments".into()));
        }
        if ex2 <= 0.0 {
            return Err(Error::invalid("Distribution1D: E[X^2] must be positive"));
        }
        if neg_xmean > 0.0 || pos_xmean < 0.0 {
            return Err(Error::invalid(
                "Distribution1D: half-line first moments must bracket zero",
            ));
        }
        if !(0.0..=1.0).contains(&ey2) {
            return Err(Error::invalid("Distribution1D: P(y=1) must lie in [0,1]"));
        }
        if exy < neg_xmean - 1e-12 || exy > pos_xmean + 1e-12 {
            return Err(Error::invalid(
                "Distribution1D: E[XY] must lie between the half-line moments",
            ));
        }
        Ok(Distribution1D {
            ex2,
            neg_xmean,
            pos_xmean,
            exy,
            ey2,
            sampler,
        })
    }

    /// X uniform on [-1, 1], label `y = 1` exactly when `x > 0`.
    pub fn uniform_sign() -> Self {
        Distribution1D {
            ex2: 1.0 / 3.0,
            neg_xmean: -0.25,
            pos_xmean: 0.25,
            exy: 0.25,
            ey2: 0.5,
            sampler: Arc::new(|rng| {
                let x: f64 = rng.random_range(-1.0..1.0);
                (x, f64::from(x > 0.0))
            }),
        }
    }

    /// Equal-prior mixture of `N(-mu, sigma^2)` (class 0) and `N(mu, sigma^2)`
    /// (class 1). The joint density is continuous and positive at `x = 0`, so
    /// a single labeled draw improves the clipped estimator in expectation.
    pub fn gaussian_mixture(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("gaussian_mixture: need finite mu, sigma > 0"));
        }
        let std_normal = statrs::distribution::Normal::new(0.0, 1.0)
            .expect("standard normal is well-formed");
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        // E[X 1{X<0}] and E[X 1{X>0}] for one N(m, sigma^2) component.
        let lower_mean = |m: f64| m * std_normal.cdf(-m / sigma) - sigma * phi(m / sigma);
        let upper_mean = |m: f64| m * std_normal.cdf(m / sigma) + sigma * phi(m / sigma);

        let sampler_mu = mu;
        let sampler_sigma = sigma;
        Distribution1D::new(
            mu * mu + sigma * sigma,
            0.5 * (lower_mean(-mu) + lower_mean(mu)),
            0.5 * (upper_mean(-mu) + upper_mean(mu)),
            0.5 * mu,
            0.5,
            Arc::new(move |rng| {
                let y = f64::from(rng.random_bool(0.5));
                let mean = if y == 1.0 { sampler_mu } else { -sampler_mu };
                let normal = Normal::new(mean, sampler_sigma).expect("valid normal");
                (normal.sample(rng), y)
            }),
        )
    }

    pub fn ex2(&self) -> f64 {
        self.ex2
    }

    pub fn neg_xmean(&self) -> f64 {
        self.neg_xmean
    }

    pub fn pos_xmean(&self) -> f64 {
        self.pos_xmean
    }

    pub fn exy(&self) -> f64 {
        self.exy
    }

    pub fn ey2(&self) -> f64 {
        self.ey2
    }

    /// Slope minimizing the true risk.
    pub fn optimal_beta(&self) -> f64 {
        self.exy / self.ex2
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        (self.sampler)(rng)
    }
}

/// A closed interval of slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NonFinite("Interval bounds".into()));
        }
        if lo > hi {
            return Err(Error::invalid(format!("Interval: lo {lo} > hi {hi}")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// The constraint interval of slopes reachable by soft labelings: the extreme
/// labelings assign label 1 to exactly one half-line, giving
/// `[neg_xmean, pos_xmean] / E[X^2]`.
pub fn cbeta_interval(dist: &Distribution1D) -> Result<Interval> {
    if dist.ex2 <= 0.0 {
        return Err(Error::invalid("cbeta_interval: E[X^2] must be positive"));
    }
    Interval::new(dist.neg_xmean / dist.ex2, dist.pos_xmean / dist.ex2)
}

/// True (population) squared-loss risk of the no-intercept model `y = x beta`:
/// `beta^2 E[X^2] - 2 beta E[XY] + E[Y^2]`.
pub fn true_risk_1d(beta: f64, dist: &Distribution1D) -> f64 {
    beta * beta * dist.ex2 - 2.0 * beta * dist.exy + dist.ey2
}

/// Clip the supervised slope into the constraint interval.
pub fn fit_semi_1d(beta_sup: f64, interval: Interval) -> f64 {
    beta_sup.clamp(interval.lo, interval.hi)
}

/// One seeded trial of the 1-D comparison.
#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub risk_sup: f64,
    pub risk_semi: f64,
    pub beta_sup: f64,
    pub beta_semi: f64,
}

/// Draw `l` labeled pairs, fit the supervised slope `sum(xy)/sum(x^2)`, clip
/// it into the constraint interval, and evaluate both true risks. A draw with
/// `sum(x^2) = 0` is discarded and redrawn.
pub fn theorem1_trial(dist: &Distribution1D, l: usize, seed: u64) -> Result<TrialOutcome> {
    if l == 0 {
        return Err(Error::invalid("theorem1_trial: need at least one labeled pair"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta_sup = 0.0;
    let mut found = false;
    for _ in 0..1000 {
        let mut sum_xy = 0.0;
        let mut sum_xx = 0.0;
        for _ in 0..l {
            let (x, y) = dist.sample(&mut rng);
            sum_xy += x * y;
            sum_xx += x * x;
        }
        if sum_xx > 0.0 {
            beta_sup = sum_xy / sum_xx;
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::invalid(
            "theorem1_trial: sampler produced only degenerate draws",
        ));
    }

    let interval = cbeta_interval(dist)?;
    let beta_semi = fit_semi_1d(beta_sup, interval);
    Ok(TrialOutcome {
        risk_sup: true_risk_1d(beta_sup, dist),
        risk_semi: true_risk_1d(beta_semi, dist),
        beta_sup,
        beta_semi,
    })
}

/// Aggregate over seeded trials.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Summary {
    pub trials: usize,
    /// Fraction of trials with `risk_semi <= risk_sup + 1e-12`.
    pub never_worse_fraction: f64,
    /// Mean of `risk_sup - risk_semi`.
    pub mean_improvement: f64,
    /// Standard error of the mean improvement.
    pub se_improvement: f64,
    pub mean_risk_sup: f64,
    pub mean_risk_semi: f64,
}

/// Run independent trials with per-trial seeds derived from
/// `(master_seed, trial index)`; results do not depend on the parallel
/// schedule.
pub fn theorem1_run(
    dist: &Distribution1D,
    l: usize,
    trials: usize,
    master_seed: u64,
) -> Result<Theorem1Summary> {
    if trials == 0 {
        return Err(Error::invalid("theorem1_run: need at least one trial"));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = crate::bench::seeding::derive_seed(
                master_seed,
                &[b"theorem1", &(i as u64).to_le_bytes()],
            );
            theorem1_trial(dist, l, seed)
        })
        .collect::<Result<_>>()?;

    let n = outcomes.len() as f64;
    let never_worse = outcomes
        .iter()
        .filter(|o| o.risk_semi <= o.risk_sup + 1e-12)
        .count();
    let improvements: Vec<f64> = outcomes.iter().map(|o| o.risk_sup - o.risk_semi).collect();
    let mean_improvement = improvements.iter().sum::<f64>() / n;
    let var = improvements
        .iter()
        .map(|v| (v - mean_improvement).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    Ok(Theorem1Summary {
        trials,
        never_worse_fraction: never_worse as f64 / n,
        mean_improvement,
        se_improvement: (var / n).sqrt(),
        mean_risk_sup: outcomes.iter().map(|o| o.risk_sup).sum::<f64>() / n,
        mean_risk_semi: outcomes.iter().map(|o| o.risk_semi).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, the independent oracle for every moment
    /// asserted in this module.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, 48)
    }

    fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
        let z = (x - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
    }

    #[test]
    fn uniform_interval_matches_quadrature() {
        let dist = Distribution1D::uniform_sign();
        let density = |x: f64| if (-1.0..=1.0).contains(&x) { 0.5 } else { 0.0 };
        let ex2 = adaptive_simpson(&|x| x * x * density(x), -1.0, 1.0, 1e-10);
        let pos = adaptive_simpson(&|x| x * density(x), 0.0, 1.0, 1e-10);
        let neg = adaptive_simpson(&|x| x * density(x), -1.0, 0.0, 1e-10);
        assert!((dist.ex2() - ex2).abs() < 1e-9);
        assert!((dist.pos_xmean() - pos).abs() < 1e-9);
        assert!((dist.neg_xmean() - neg).abs() < 1e-9);

        let interval = cbeta_interval(&dist).unwrap();
        assert!((interval.lo + 0.75).abs() < 1e-9);
        assert!((interval.hi - 0.75).abs() < 1e-9);
    }

    #[test]
    fn standard_normal_interval() {
        // Moments via quadrature over a wide truncation of N(0,1).
        let ex2 = adaptive_simpson(&|x| x * x * gaussian_pdf(x, 0.0, 1.0), -12.0, 12.0, 1e-11);
        let pos = adaptive_simpson(&|x| x * gaussian_pdf(x, 0.0, 1.0), 0.0, 12.0, 1e-11);
        let dist = Distribution1D::new(
            ex2,
            -pos,
            pos,
            0.0,
            0.5,
            Arc::new(|rng| (rng.random_range(-1.0..1.0), 0.0)),
        )
        .unwrap();
        let interval = cbeta_interval(&dist).unwrap();
        let expected = 1.0 / (2.0 * PI).sqrt();
        assert!((interval.hi - expected).abs() < 1e-6);
        assert!((interval.lo + expected).abs() < 1e-6);
    }

    #[test]
    fn uniform_01_interval() {
        let density = |x: f64| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
        let ex2 = adaptive_simpson(&|x| x * x * density(x), 0.0, 1.0, 1e-10);
        let pos = adaptive_simpson(&|x| x * density(x), 0.0, 1.0, 1e-10);
        let dist = Distribution1D::new(
            ex2,
            0.0,
            pos,
            pos,
            1.0,
            Arc::new(|rng| (rng.random_range(0.0..1.0), 1.0)),
        )
        .unwrap();
        let interval = cbeta_interval(&dist).unwrap();
        assert!((interval.lo - 0.0).abs() < 1e-9);
        assert!((interval.hi - 1.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mixture_moments_match_quadrature() {
        let (mu, sigma) = (1.0, 1.0);
        let dist = Distribution1D::gaussian_mixture(mu, sigma).unwrap();
        let fx = |x: f64| 0.5 * gaussian_pdf(x, -mu, sigma) + 0.5 * gaussian_pdf(x, mu, sigma);
        let span = 14.0;
        let ex2 = adaptive_simpson(&|x| x * x * fx(x), -span, span, 1e-11);
        let neg = adaptive_simpson(&|x| x * fx(x), -span, 0.0, 1e-11);
        let pos = adaptive_simpson(&|x| x * fx(x), 0.0, span, 1e-11);
        // E[XY] integrates x against the class-1 component only.
        let exy = adaptive_simpson(&|x| x * 0.5 * gaussian_pdf(x, mu, sigma), -span, span, 1e-11);
        assert!((dist.ex2() - ex2).abs() < 1e-8);
        assert!((dist.neg_xmean() - neg).abs() < 1e-8);
        assert!((dist.pos_xmean() - pos).abs() < 1e-8);
        assert!((dist.exy() - exy).abs() < 1e-8);
    }

    #[test]
    fn interval_endpoints_are_extreme_labelings() {
        // Under E[y|x] = 1{x>0} the slope integral equals pos_xmean; under
        // 1{x<0} it equals neg_xmean (computed via quadrature).
        let (mu, sigma) = (0.7, 1.3);
        let dist = Distribution1D::gaussian_mixture(mu, sigma).unwrap();
        let fx = |x: f64| 0.5 * gaussian_pdf(x, -mu, sigma) + 0.5 * gaussian_pdf(x, mu, sigma);
        let span = 18.0;
        let upper = adaptive_simpson(&|x| x * fx(x), 0.0, span, 1e-11) / dist.ex2();
        let lower = adaptive_simpson(&|x| x * fx(x), -span, 0.0, 1e-11) / dist.ex2();
        let interval = cbeta_interval(&dist).unwrap();
        assert!((interval.hi - upper).abs() < 1e-8);
        assert!((interval.lo - lower).abs() < 1e-8);
    }

    #[test]
    fn risk_examples() {
        let dist = Distribution1D::uniform_sign();
        assert_eq!(true_risk_1d(0.0, &dist), dist.ey2());
        // Analytic integration oracle: risk(3/4) under the sign model is 5/16.
        let density = |x: f64| if (-1.0..=1.0).contains(&x) { 0.5 } else { 0.0 };
        let beta = 0.75;
        let loss = |x: f64, y: f64| (x * beta - y).powi(2);
        let risk_quad = adaptive_simpson(&|x| loss(x, 1.0) * density(x), 0.0, 1.0, 1e-10)
            + adaptive_simpson(&|x| loss(x, 0.0) * density(x), -1.0, 0.0, 1e-10);
        assert!((risk_quad - 0.3125).abs() < 1e-9);
        assert!((true_risk_1d(beta, &dist) - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn optimal_beta_is_stationary_and_inside_interval() {
        for dist in [
            Distribution1D::uniform_sign(),
            Distribution1D::gaussian_mixture(1.0, 1.0).unwrap(),
            Distribution1D::gaussian_mixture(0.2, 2.0).unwrap(),
        ] {
            let beta_star = dist.optimal_beta();
            let h = 1e-6;
            let slope =
                (true_risk_1d(beta_star + h, &dist) - true_risk_1d(beta_star - h, &dist)) / (2.0 * h);
            assert!(slope.abs() <= 1e-8);
            assert!(cbeta_interval(&dist).unwrap().contains(beta_star));
        }
    }

    #[test]
    fn clipping_examples() {
        let wide = Interval::new(-0.75, 0.75).unwrap();
        assert_eq!(fit_semi_1d(1.0, wide), 0.75);
        assert_eq!(fit_semi_1d(0.5, wide), 0.5);
        let half = Interval::new(0.0, 1.5).unwrap();
        assert_eq!(fit_semi_1d(-2.0, half), 0.0);
    }

    #[test]
    fn single_draw_hand_example() {
        // One labeled pair (x=0.5, y=1) under the sign model.
        let dist = Distribution1D::uniform_sign();
        let beta_sup = (0.5 * 1.0) / (0.5 * 0.5);
        assert_eq!(beta_sup, 2.0);
        let beta_semi = fit_semi_1d(beta_sup, cbeta_interval(&dist).unwrap());
        assert_eq!(beta_semi, 0.75);
        let risk_sup = true_risk_1d(beta_sup, &dist);
        let risk_semi = true_risk_1d(beta_semi, &dist);
        assert!((risk_sup - (4.0 / 3.0 - 1.0 + 0.5)).abs() < 1e-12);
        assert!((risk_semi - 0.3125).abs() < 1e-12);
        assert!(risk_semi < risk_sup);
    }

    #[test]
    fn trials_never_worse_and_interior_case_unchanged() {
        let dist = Distribution1D::uniform_sign();
        let mut saw_interior = false;
        for seed in 0..500 {
            let t = theorem1_trial(&dist, 1, seed).unwrap();
            assert!(t.risk_semi <= t.risk_sup + 1e-12);
            if cbeta_interval(&dist).unwrap().contains(t.beta_sup) {
                assert_eq!(t.beta_semi, t.beta_sup);
                assert_eq!(t.risk_semi, t.risk_sup);
                saw_interior = true;
            }
        }
        assert!(saw_interior);
    }

    #[test]
    fn run_is_deterministic_and_parallel_safe() {
        let dist = Distribution1D::gaussian_mixture(1.0, 1.0).unwrap();
        let a = theorem1_run(&dist, 2, 2000, 99).unwrap();
        let b = theorem1_run(&dist, 2, 2000, 99).unwrap();
        assert_eq!(a.never_worse_fraction, b.never_worse_fraction);
        assert_eq!(a.mean_improvement, b.mean_improvement);
        assert_eq!(a.never_worse_fraction, 1.0);
    }
}
