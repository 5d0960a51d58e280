//! Executable battery of the crate's numerical contracts.
//!
//! Each check pits an implementation path against an independent route to the
//! same quantity (hand-derived constants, brute-force scans, grid search,
//! finite differences, exact enumeration) and reports pass/fail with a short
//! diagnostic. The `icls selfcheck` CLI command runs the whole battery; the
//! acceptance test suite calls the same functions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{fit_self_learning, fit_usm, SELF_LEARNING_CAP};
use crate::bench::stats::wilcoxon_signed_rank;
use crate::error::Result;
use crate::icls::{build_constraint_problem, fit_icls, refit, solve_box_qp, BoxQp};
use crate::linalg::{min_symmetric_eigenvalue, Matrix, Vector};
use crate::supervised::{classify, fit_ls, LabeledSet};
use crate::theory1d::{theorem1_run, Distribution1D};

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

/// Run the full battery.
pub fn run_all(master_seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        theorem1_never_worse(master_seed)?,
        theorem1_strict_improvement(master_seed)?,
        qp_matches_grid_oracle(master_seed)?,
        qp_is_positive_semidefinite(master_seed)?,
        qp_gradient_matches_finite_differences(master_seed)?,
        imputed_labels_reproduce_model(master_seed)?,
        micro_instance_values()?,
        usm_encoding_invariance(master_seed)?,
        self_learning_terminates(master_seed)?,
        wilcoxon_exact_enumeration()?,
    ])
}

fn random_labeled(rng: &mut ChaCha8Rng, l: usize, d: usize) -> LabeledSet {
    loop {
        let y = Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5)));
        let pos = y.sum();
        if pos > 0.0 && pos < l as f64 {
            let x = Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0));
            return LabeledSet::new(x, y).expect("random labeled set is valid");
        }
    }
}

/// 10,000 seeded 1-D trials per (L, distribution) pair: the clipped estimator
/// must never have higher true risk than the supervised slope.
pub fn theorem1_never_worse(master_seed: u64) -> Result<Check> {
    const TRIALS: usize = 10_000;
    let mut worst_fraction = 1.0_f64;
    let mut detail = String::new();
    for (dist_name, dist) in [
        ("uniform-sign", Distribution1D::uniform_sign()),
        ("gaussian-mixture", Distribution1D::gaussian_mixture(1.0, 1.0)?),
    ] {
        for l in [1usize, 2, 5, 20] {
            let seed = crate::bench::seeding::derive_seed(
                master_seed,
                &[b"never-worse", dist_name.as_bytes(), &(l as u64).to_le_bytes()],
            );
            let run = theorem1_run(&dist, l, TRIALS, seed)?;
            worst_fraction = worst_fraction.min(run.never_worse_fraction);
            detail = format!(
                "last cell {dist_name} L={l}: fraction {:.4}",
                run.never_worse_fraction
            );
        }
    }
    Ok(Check::new(
        "theorem1 never-worse (8 x 10k trials)",
        worst_fraction == 1.0,
        format!("min fraction {worst_fraction:.6}; {detail}"),
    ))
}

/// With one labeled draw from a distribution whose joint density is positive
/// at (0, 1), the mean risk improvement must clear 3 standard errors.
///
/// A wide class separation keeps the density at zero positive but tiny;
/// near-zero draws of class 1 produce slopes `1/x` whose risk has a
/// `t^(-1/2)` tail, and with appreciable mass there the sample z-statistic
/// would be dominated by single outliers instead of the bulk improvement.
pub fn theorem1_strict_improvement(master_seed: u64) -> Result<Check> {
    const TRIALS: usize = 10_000;
    let dist = Distribution1D::gaussian_mixture(5.0, 1.0)?;
    let run = theorem1_run(&dist, 1, TRIALS, master_seed)?;
    let z = run.mean_improvement / run.se_improvement;
    Ok(Check::new(
        "theorem1 strict improvement (L=1, mixture mu=5)",
        run.mean_improvement > 0.0 && z >= 3.0,
        format!(
            "mean improvement {:.5} (se {:.5}, z {:.1})",
            run.mean_improvement, run.se_improvement, z
        ),
    ))
}

fn random_qp_instance(
    rng: &mut ChaCha8Rng,
    l_range: std::ops::RangeInclusive<usize>,
    u_max: usize,
    d_max: usize,
) -> (LabeledSet, Matrix, bool) {
    let d = rng.random_range(1..=d_max);
    let lo = (*l_range.start()).max(d + 1);
    let l = rng.random_range(lo..=*l_range.end());
    let u = rng.random_range(1..=u_max);
    let labeled = random_labeled(rng, l, d);
    let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
    let intercept = rng.random_bool(0.5);
    (labeled, x_u, intercept)
}

/// 100 random small instances: the solver objective must not exceed the best
/// grid point (step 0.01 per coordinate) by more than 1e-3.
pub fn qp_matches_grid_oracle(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x9d0c_57a1);
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..100 {
        let (labeled, x_u, intercept) = random_qp_instance(&mut rng, 4..=20, 3, 3);
        let qp = build_constraint_problem(&labeled, &x_u, intercept)?;
        let sol = solve_box_qp(&qp, None)?;
        let grid_best = grid_minimum(&qp, 100);
        worst_gap = worst_gap.max(sol.objective - grid_best);
        if sol.objective > grid_best + 1e-3 {
            return Ok(Check::new(
                "qp solver vs grid oracle (100 instances)",
                false,
                format!("solver {:.8} exceeds grid {:.8}", sol.objective, grid_best),
            ));
        }
    }
    Ok(Check::new(
        "qp solver vs grid oracle (100 instances)",
        true,
        format!("worst objective gap {worst_gap:.2e} (tolerance 1e-3)"),
    ))
}

/// Exhaustive grid over `{0, 1/steps, ..., 1}^U`.
fn grid_minimum(qp: &BoxQp, steps: usize) -> f64 {
    let u = qp.dim();
    let mut point = vec![0usize; u];
    let mut y = Vector::zeros(u);
    let mut best = f64::INFINITY;
    loop {
        for i in 0..u {
            y[i] = point[i] as f64 / steps as f64;
        }
        best = best.min(qp.objective(&y));
        // Odometer increment.
        let mut carry = 0;
        loop {
            if carry == u {
                return best;
            }
            point[carry] += 1;
            if point[carry] <= steps {
                break;
            }
            point[carry] = 0;
            carry += 1;
        }
    }
}

/// 200 random instances: the QP matrix is positive semi-definite.
pub fn qp_is_positive_semidefinite(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x11c3_99d7);
    let mut min_eig = f64::INFINITY;
    for _ in 0..200 {
        let (labeled, x_u, intercept) = random_qp_instance(&mut rng, 6..=50, 30, 5);
        let qp = build_constraint_problem(&labeled, &x_u, intercept)?;
        min_eig = min_eig.min(min_symmetric_eigenvalue(qp.q()));
    }
    Ok(Check::new(
        "qp matrix positive semi-definite (200 instances)",
        min_eig >= -1e-10,
        format!("smallest eigenvalue {min_eig:.2e}"),
    ))
}

/// 20 instances x 20 interior points: the analytic gradient matches central
/// finite differences to relative error 1e-5.
pub fn qp_gradient_matches_finite_differences(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x5bd1_e995);
    let mut worst_rel = 0.0_f64;
    for _ in 0..20 {
        let (labeled, x_u, intercept) = random_qp_instance(&mut rng, 5..=25, 8, 4);
        let qp = build_constraint_problem(&labeled, &x_u, intercept)?;
        let u = qp.dim();
        for _ in 0..20 {
            let y = Vector::from_fn(u, |_, _| rng.random_range(0.1..0.9));
            let grad = qp.gradient(&y);
            let h = 1e-6;
            for i in 0..u {
                let mut hi = y.clone();
                let mut lo = y.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd = (qp.objective(&hi) - qp.objective(&lo)) / (2.0 * h);
                let scale = grad[i].abs().max(fd.abs()).max(1e-8);
                worst_rel = worst_rel.max((grad[i] - fd).abs() / scale);
            }
        }
    }
    Ok(Check::new(
        "qp gradient vs finite differences (20 x 20 points)",
        worst_rel <= 1e-5,
        format!("worst relative error {worst_rel:.2e}"),
    ))
}

/// Refitting with the imputed soft labels must reproduce the ICLS model.
pub fn imputed_labels_reproduce_model(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x2545_f491);
    let mut worst = 0.0_f64;
    for _ in 0..120 {
        let (labeled, x_u, intercept) = random_qp_instance(&mut rng, 4..=25, 8, 3);
        let fit = fit_icls(&labeled, &x_u, intercept)?;
        let again = refit(&labeled, &x_u, &fit.y_u_star, intercept)?;
        worst = worst.max((again.beta() - fit.model.beta()).amax());
        if !fit.y_u_star.iter().all(|&v| (0.0..=1.0).contains(&v)) {
            return Ok(Check::new(
                "icls model reproducible from imputed labels",
                false,
                "imputed label escaped [0,1]".to_string(),
            ));
        }
    }
    Ok(Check::new(
        "icls model reproducible from imputed labels",
        worst <= 1e-8,
        format!("worst refit deviation {worst:.2e}"),
    ))
}

/// The hand-derived 1-D instance: labeled (x=1, y=1), unlabeled x=2, no
/// intercept. Expected Q = 0.32, c = -0.64, imputed label 1, slope 0.6.
pub fn micro_instance_values() -> Result<Check> {
    let labeled = LabeledSet::new(
        Matrix::from_element(1, 1, 1.0),
        Vector::from_element(1, 1.0),
    )?;
    let x_u = Matrix::from_element(1, 1, 2.0);
    let qp = build_constraint_problem(&labeled, &x_u, false)?;
    let fit = fit_icls(&labeled, &x_u, false)?;

    // Brute-force scan over y_u in {0, 0.001, ..., 1} and refit at the best.
    let mut best_obj = f64::INFINITY;
    let mut best_y = 0.0;
    for k in 0..=1000 {
        let y = k as f64 / 1000.0;
        let obj = qp.objective(&Vector::from_element(1, y));
        if obj < best_obj {
            best_obj = obj;
            best_y = y;
        }
    }
    let scan_beta = refit(&labeled, &x_u, &Vector::from_element(1, best_y), false)?;

    let passed = (qp.q()[(0, 0)] - 0.32).abs() <= 1e-6
        && (qp.c()[0] + 0.64).abs() <= 1e-6
        && (fit.y_u_star[0] - 1.0).abs() <= 1e-6
        && (fit.model.beta()[0] - 0.6).abs() <= 1e-6
        && (best_y - 1.0).abs() <= 1e-9
        && (scan_beta.beta()[0] - fit.model.beta()[0]).abs() <= 1e-6;
    Ok(Check::new(
        "hand-derived micro instance (Q, c, y*, beta)",
        passed,
        format!(
            "Q {:.6}, c {:.6}, y* {:.6}, beta {:.6}, scan argmin {best_y:.3}",
            qp.q()[(0, 0)],
            qp.c()[0],
            fit.y_u_star[0],
            fit.model.beta()[0]
        ),
    ))
}

/// Swapping the `{0,1}` encoding must complement every USM prediction.
pub fn usm_encoding_invariance(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x85eb_ca6b);
    for case in 0..20 {
        let d = rng.random_range(1..=4);
        let l = rng.random_range(4..=30);
        let u = rng.random_range(0..=25);
        let labeled = random_labeled(&mut rng, l, d);
        let swapped = LabeledSet::new(labeled.x().clone(), labeled.y().map(|v| 1.0 - v))?;
        let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
        let probe = Matrix::from_fn(40, d, |_, _| rng.random_range(-3.0..3.0));
        let a = classify(&fit_usm(&labeled, &x_u)?, &probe)?;
        let b = classify(&fit_usm(&swapped, &x_u)?, &probe)?;
        for i in 0..a.len() {
            if a[i] != 1.0 - b[i] {
                return Ok(Check::new(
                    "usm encoding invariance (20 datasets)",
                    false,
                    format!("case {case}: prediction {i} not complemented"),
                ));
            }
        }
    }
    Ok(Check::new(
        "usm encoding invariance (20 datasets)",
        true,
        "all predictions exactly complemented".to_string(),
    ))
}

/// Self-learning terminates within the cap and, at a fixed point, the stored
/// labels equal the model's own hard predictions exactly.
pub fn self_learning_terminates(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0xc2b2_ae35);
    let mut converged = 0usize;
    for _ in 0..100 {
        let d = rng.random_range(1..=4);
        let l = rng.random_range(4..=30);
        let u = rng.random_range(1..=30);
        let labeled = random_labeled(&mut rng, l, d);
        let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
        let fit = fit_self_learning(&labeled, &x_u, true)?;
        if fit.iterations > SELF_LEARNING_CAP {
            return Ok(Check::new(
                "self-learning termination and fixed point (100 problems)",
                false,
                format!("exceeded cap with {} iterations", fit.iterations),
            ));
        }
        if fit.converged {
            converged += 1;
            let again = classify(&fit.model, &x_u)?;
            if again != fit.imputed {
                return Ok(Check::new(
                    "self-learning termination and fixed point (100 problems)",
                    false,
                    "converged labels differ from model predictions".to_string(),
                ));
            }
        }
    }
    Ok(Check::new(
        "self-learning termination and fixed point (100 problems)",
        true,
        format!("{converged}/100 converged to a fixed point"),
    ))
}

/// Exact Wilcoxon p-values match brute-force sign enumeration bit-for-bit for
/// every sign pattern with n <= 6, for distinct and tied magnitudes.
pub fn wilcoxon_exact_enumeration() -> Result<Check> {
    let mut cases = 0usize;
    for n in 1usize..=6 {
        for pattern in 0u32..(1 << n) {
            for tied in [false, true] {
                let diffs: Vec<f64> = (0..n)
                    .map(|i| {
                        let mag = if tied { (i / 2 + 1) as f64 } else { (i + 1) as f64 };
                        if pattern & (1 << i) != 0 {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect();
                let zeros = vec![0.0; n];
                let (_, p) = wilcoxon_signed_rank(&diffs, &zeros)?;
                let expected = enumeration_oracle(&diffs);
                if p.to_bits() != expected.to_bits() {
                    return Ok(Check::new(
                        "wilcoxon exact p vs enumeration oracle (n <= 6)",
                        false,
                        format!("n={n} pattern={pattern:b} tied={tied}: {p} vs {expected}"),
                    ));
                }
                cases += 1;
            }
        }
    }
    Ok(Check::new(
        "wilcoxon exact p vs enumeration oracle (n <= 6)",
        true,
        format!("{cases} sign patterns match bit-for-bit"),
    ))
}

/// Brute-force two-sided p over all sign assignments of the ranked |d|.
fn enumeration_oracle(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    // Average ranks of |d|, recomputed independently (insertion style).
    let mut ranks = vec![0.0; n];
    for i in 0..n {
        let mut less = 0usize;
        let mut equal = 0usize;
        for j in 0..n {
            if diffs[j].abs() < diffs[i].abs() {
                less += 1;
            } else if diffs[j].abs() == diffs[i].abs() {
                equal += 1;
            }
        }
        // Ranks less+1 ..= less+equal share their average.
        ranks[i] = (2 * less + equal + 1) as f64 / 2.0;
    }
    let observed: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let observed2 = (2.0 * observed).round() as i64;
    let mut c_le = 0u64;
    let mut c_ge = 0u64;
    for mask in 0u64..(1 << n) {
        let sum: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        let s2 = (2.0 * sum).round() as i64;
        if s2 <= observed2 {
            c_le += 1;
        }
        if s2 >= observed2 {
            c_ge += 1;
        }
    }
    let total = 1u64 << n;
    (2.0 * c_le.min(c_ge) as f64 / total as f64).min(1.0)
}

/// Supervised baseline risk on the labeled set never beats ICLS's labeled
/// risk (the constrained minimum cannot be lower than the unconstrained one).
pub fn labeled_risk_ordering(master_seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x27d4_eb2f);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (labeled, x_u, intercept) = random_qp_instance(&mut rng, 5..=25, 10, 3);
        let semi = fit_icls(&labeled, &x_u, intercept)?;
        let sup = fit_ls(&labeled, intercept)?;
        let semi_risk = crate::supervised::risk_hat(&semi.model, &labeled)?;
        let sup_risk = crate::supervised::risk_hat(&sup, &labeled)?;
        worst = worst.max(sup_risk - semi_risk);
    }
    Ok(Check::new(
        "labeled risk of icls >= supervised minimum",
        worst <= 1e-12,
        format!("max(sup - semi) = {worst:.2e}"),
    ))
}
