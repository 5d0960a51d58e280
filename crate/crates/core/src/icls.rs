//! Implicitly constrained least squares.
//!
//! The semi-supervised fit minimizes the supervised empirical risk over the
//! set of least squares solutions reachable by soft labelings
//! `y_u in [0,1]^U` of the unlabeled rows. Eliminating the closed-form
//! coefficients turns this into a box-constrained quadratic program in the
//! soft labels, solved here by projected gradient descent with a backtracking
//! line search.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::supervised::{self, LabeledSet, LinearModel};

/// Convergence threshold on the infinity norm of the projected gradient.
pub const PG_TOLERANCE: f64 = 1e-8;

/// Iteration cap for a problem with `u` unlabeled rows.
pub fn iteration_cap(u: usize) -> usize {
    2000.max(20 * u)
}

/// The box-constrained quadratic program `min 1/2 y'Qy + c'y, y in [0,1]^U`.
///
/// `Q` is positive semi-definite by construction (it is a scaled Gram matrix)
/// but typically singular: distinct labelings can reach the same solution.
#[derive(Debug, Clone)]
pub struct BoxQp {
    q: Matrix,
    c: Vector,
}

impl BoxQp {
    pub const LOWER: f64 = 0.0;
    pub const UPPER: f64 = 1.0;

    pub fn new(q: Matrix, c: Vector) -> Result<Self> {
        if q.nrows() == 0 {
            return Err(Error::invalid("BoxQp: empty problem"));
        }
        if !q.is_square() || q.nrows() != c.len() {
            return Err(Error::dims(format!(
                "BoxQp: Q is {}x{}, c has {} entries",
                q.nrows(),
                q.ncols(),
                c.len()
            )));
        }
        linalg::ensure_finite_matrix(&q, "BoxQp: Q")?;
        linalg::ensure_finite_vector(&c, "BoxQp: c")?;
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::invalid(format!("BoxQp: Q asymmetric by {asym:e}")));
        }
        Ok(BoxQp { q, c })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    /// Number of box-constrained variables.
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// `1/2 y'Qy + c'y`.
    pub fn objective(&self, y: &Vector) -> f64 {
        0.5 * (&self.q * y).dot(y) + self.c.dot(y)
    }

    /// `Qy + c`.
    pub fn gradient(&self, y: &Vector) -> Vector {
        &self.q * y + &self.c
    }
}

/// Outcome of [`solve_box_qp`].
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub y: Vector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A fitted ICLS classifier together with the minimizing soft labeling.
///
/// The soft labeling itself is generally not unique; only the model and the
/// objective value are contractual.
#[derive(Debug, Clone)]
pub struct IclsFit {
    pub model: LinearModel,
    pub y_u_star: Vector,
    pub objective: f64,
    pub solver_iterations: usize,
    pub converged: bool,
}

fn clamp01(v: &mut Vector) {
    for x in v.iter_mut() {
        *x = x.clamp(BoxQp::LOWER, BoxQp::UPPER);
    }
}

struct Assembled {
    qp: BoxQp,
    /// Objective value of the risk at `y_u = 0`; added to the QP value to
    /// recover the labeled empirical risk.
    constant: f64,
}

fn assemble(labeled: &LabeledSet, x_u: &Matrix, intercept: bool) -> Result<Assembled> {
    if x_u.nrows() == 0 {
        return Err(Error::invalid("icls: need at least one unlabeled row"));
    }
    if x_u.ncols() != labeled.dim() {
        return Err(Error::dims(format!(
            "icls: labeled data has {} features, unlabeled has {}",
            labeled.dim(),
            x_u.ncols()
        )));
    }
    linalg::ensure_finite_matrix(x_u, "icls: unlabeled features")?;

    let l = labeled.len() as f64;
    let x = supervised::design_matrix(labeled.x(), intercept);
    let xu = supervised::design_matrix(x_u, intercept);
    let xe = linalg::vstack(&x, &xu)?;

    let gram_e = xe.transpose() * &xe;
    let mut ginv = linalg::pinv(&gram_e)?;
    // The pseudo-inverse of a symmetric matrix is symmetric; enforce it so the
    // assembled Q is exactly its own transpose.
    ginv = (&ginv + ginv.transpose()) * 0.5;

    // With C = X_u G^+ X', the QP matrices of the eliminated problem are
    // Q = (2/L) C C' and c = (2/L) C (X G^+ X' y - y).
    let c_mat = &xu * (&ginv * x.transpose());
    let q = (&c_mat * c_mat.transpose()) * (2.0 / l);
    let yhat0 = &x * (&ginv * (x.transpose() * labeled.y()));
    let resid0 = &yhat0 - labeled.y();
    let c_vec = (&c_mat * &resid0) * (2.0 / l);
    let constant = resid0.norm_squared() / l;

    Ok(Assembled {
        qp: BoxQp::new(q, c_vec)?,
        constant,
    })
}

/// Assemble the box QP whose variables are the soft labels of `x_u`.
pub fn build_constraint_problem(
    labeled: &LabeledSet,
    x_u: &Matrix,
    intercept: bool,
) -> Result<BoxQp> {
    Ok(assemble(labeled, x_u, intercept)?.qp)
}

/// Minimize the box QP by projected gradient descent with backtracking.
///
/// The step length starts from a spectral (Barzilai-Borwein) estimate and is
/// halved until the quadratic sufficient-decrease condition holds. Iteration
/// stops when the projected gradient drops below [`PG_TOLERANCE`] in infinity
/// norm or the cap is hit, in which case the best iterate so far is returned
/// with `converged = false`.
pub fn solve_box_qp(qp: &BoxQp, y0: Option<&Vector>) -> Result<QpSolution> {
    let u = qp.dim();
    let mut y = match y0 {
        Some(v) => {
            if v.len() != u {
                return Err(Error::dims(format!(
                    "solve_box_qp: start point has {} entries for {} variables",
                    v.len(),
                    u
                )));
            }
            linalg::ensure_finite_vector(v, "solve_box_qp: start point")?;
            let mut v = v.clone();
            clamp01(&mut v);
            v
        }
        None => Vector::from_element(u, 0.5),
    };

    let cap = iteration_cap(u);
    // Row-sum bound on the spectral radius seeds the first step length.
    let row_bound = (0..u)
        .map(|i| qp.q.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let mut step = if row_bound > 0.0 { 1.0 / row_bound } else { 1.0 };

    let mut grad = qp.gradient(&y);
    let mut obj = qp.objective(&y);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        let projected_grad = Vector::from_fn(u, |i, _| {
            y[i] - (y[i] - grad[i]).clamp(BoxQp::LOWER, BoxQp::UPPER)
        });
        if projected_grad.amax() <= PG_TOLERANCE {
            converged = true;
            break;
        }

        // Backtrack along the projection arc until sufficient decrease holds.
        let mut t = step;
        let (next, next_obj) = loop {
            let mut candidate = &y - &grad * t;
            clamp01(&mut candidate);
            let d = &candidate - &y;
            let d_norm2 = d.norm_squared();
            if d_norm2 == 0.0 {
                break (candidate, obj);
            }
            let cand_obj = qp.objective(&candidate);
            if cand_obj <= obj + grad.dot(&d) + 0.5 * d_norm2 / t {
                break (candidate, cand_obj);
            }
            t *= 0.5;
            if t < 1e-18 {
                break (candidate, cand_obj.min(obj));
            }
        };

        let delta = &next - &y;
        if delta.amax() == 0.0 {
            // The projection pinned every coordinate; the projected gradient
            // test above will flag convergence on the next pass.
            converged = true;
            break;
        }
        let next_grad = qp.gradient(&next);
        // Barzilai-Borwein step for the next iteration; for a quadratic the
        // gradient difference is exactly Q * delta.
        let dg = &next_grad - &grad;
        let denom = delta.dot(&dg);
        step = if denom > 0.0 {
            (delta.norm_squared() / denom).clamp(1e-12, 1e12)
        } else {
            (t * 2.0).clamp(1e-12, 1e12)
        };

        y = next;
        obj = next_obj;
        grad = next_grad;
        iterations += 1;
    }

    Ok(QpSolution {
        objective: qp.objective(&y),
        y,
        iterations,
        converged,
    })
}

/// Fit the ICLS classifier.
///
/// Solves the soft-label QP from the box center, then refits least squares on
/// the labeled rows plus the unlabeled rows with their imputed fractional
/// targets. The reported objective is the labeled empirical risk at the
/// solution.
pub fn fit_icls(labeled: &LabeledSet, x_u: &Matrix, intercept: bool) -> Result<IclsFit> {
    let assembled = assemble(labeled, x_u, intercept)?;
    let solution = solve_box_qp(&assembled.qp, None)?;
    let model = refit(labeled, x_u, &solution.y, intercept)?;
    Ok(IclsFit {
        model,
        y_u_star: solution.y,
        objective: solution.objective + assembled.constant,
        solver_iterations: solution.iterations,
        converged: solution.converged,
    })
}

/// Least squares fit on the labeled rows plus `(x_u, y_u)` treated as
/// real-valued targets. `fit_icls` uses this for its final model; tests use it
/// to confirm the model stays reproducible from its own imputed labels.
pub fn refit(
    labeled: &LabeledSet,
    x_u: &Matrix,
    y_u: &Vector,
    intercept: bool,
) -> Result<LinearModel> {
    if y_u.len() != x_u.nrows() {
        return Err(Error::dims(format!(
            "refit: {} unlabeled rows vs {} imputed labels",
            x_u.nrows(),
            y_u.len()
        )));
    }
    let x_ext = linalg::vstack(labeled.x(), x_u)?;
    let mut y_ext = Vector::zeros(labeled.len() + y_u.len());
    y_ext.rows_mut(0, labeled.len()).copy_from(labeled.y());
    y_ext.rows_mut(labeled.len(), y_u.len()).copy_from(y_u);
    supervised::fit_linear(&x_ext, &y_ext, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supervised::{fit_ls, risk_hat};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn micro_instance() -> (LabeledSet, Matrix) {
        let labeled = LabeledSet::new(
            Matrix::from_column_slice(1, 1, &[1.0]),
            Vector::from_column_slice(&[1.0]),
        )
        .unwrap();
        let x_u = Matrix::from_column_slice(1, 1, &[2.0]);
        (labeled, x_u)
    }

    #[test]
    fn micro_instance_q_and_c() {
        let (labeled, x_u) = micro_instance();
        let qp = build_constraint_problem(&labeled, &x_u, false).unwrap();
        // Independent scalar evaluation: ginv = 1/(1+4), q = 2*xu*g*x*x*g*xu,
        // c = 2*(xu*g*x*x*g*x - xu*g*x).
        let g = 1.0 / 5.0;
        let expected_q = 2.0 * 2.0 * g * 1.0 * 1.0 * g * 2.0;
        let expected_c = 2.0 * (2.0 * g * 1.0 * 1.0 * g * 1.0 - 2.0 * g * 1.0);
        assert!((qp.q()[(0, 0)] - expected_q).abs() < 1e-12);
        assert!((qp.c()[0] - expected_c).abs() < 1e-12);
        assert!((expected_q - 0.32).abs() < 1e-15);
        assert!((expected_c + 0.64).abs() < 1e-15);
    }

    #[test]
    fn zero_unlabeled_row_contributes_nothing() {
        let labeled = LabeledSet::new(
            Matrix::from_row_slice(3, 2, &[1.0, 0.5, -0.5, 1.0, 0.25, -1.0]),
            Vector::from_column_slice(&[1.0, 0.0, 1.0]),
        )
        .unwrap();
        let x_u = Matrix::from_row_slice(2, 2, &[0.7, -0.2, 0.0, 0.0]);
        let qp = build_constraint_problem(&labeled, &x_u, false).unwrap();
        assert_eq!(qp.q()[(1, 1)], 0.0);
        assert_eq!(qp.q()[(0, 1)], 0.0);
        assert_eq!(qp.q()[(1, 0)], 0.0);
        assert_eq!(qp.c()[1], 0.0);
    }

    #[test]
    fn q_is_exactly_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let l = rng.random_range(4..12);
            let u = rng.random_range(1..8);
            let d = rng.random_range(1..4);
            let labeled = LabeledSet::new(
                Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0)),
                Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5))),
            )
            .unwrap();
            let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
            let qp = build_constraint_problem(&labeled, &x_u, true).unwrap();
            assert_eq!(qp.q(), &qp.q().transpose());
        }
    }

    #[test]
    fn solver_clips_exterior_minimizer() {
        let qp = BoxQp::new(
            Matrix::from_element(1, 1, 0.32),
            Vector::from_element(1, -0.64),
        )
        .unwrap();
        let sol = solve_box_qp(&qp, None).unwrap();
        assert!(sol.converged);
        assert!((sol.y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solver_finds_interior_minimizer() {
        let qp = BoxQp::new(Matrix::from_element(1, 1, 2.0), Vector::from_element(1, -1.0))
            .unwrap();
        let sol = solve_box_qp(&qp, None).unwrap();
        assert!(sol.converged);
        assert!((sol.y[0] - 0.5).abs() < 1e-9);
        assert!((sol.objective - (-0.25)).abs() < 1e-12);
    }

    #[test]
    fn solver_separable_clipping() {
        let qp = BoxQp::new(
            Matrix::identity(2, 2),
            Vector::from_column_slice(&[1.0, -3.0]),
        )
        .unwrap();
        let sol = solve_box_qp(&qp, None).unwrap();
        assert!(sol.converged);
        assert!(sol.y[0].abs() < 1e-9);
        assert!((sol.y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn micro_instance_fit() {
        let (labeled, x_u) = micro_instance();
        let fit = fit_icls(&labeled, &x_u, false).unwrap();
        // Brute-force scan over y_u in {0, 0.001, ..., 1} bounds the optimum.
        let qp = build_constraint_problem(&labeled, &x_u, false).unwrap();
        let best = (0..=1000)
            .map(|k| qp.objective(&Vector::from_element(1, k as f64 / 1000.0)))
            .fold(f64::INFINITY, f64::min);
        let sol = solve_box_qp(&qp, None).unwrap();
        assert!(sol.objective <= best + 1e-9);

        assert!((fit.y_u_star[0] - 1.0).abs() < 1e-6);
        assert!((fit.model.beta()[0] - 0.6).abs() < 1e-6);
        // The supervised slope 1.0 lies outside C_beta = [0.2, 0.6].
        let sup = fit_ls(&labeled, false).unwrap();
        assert!((sup.beta()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_supervised_solution_is_kept() {
        let labeled = LabeledSet::new(
            Matrix::from_column_slice(2, 1, &[1.0, 1.0]),
            Vector::from_column_slice(&[1.0, 0.0]),
        )
        .unwrap();
        let x_u = Matrix::from_column_slice(1, 1, &[1.0]);
        let fit = fit_icls(&labeled, &x_u, false).unwrap();
        // beta_sup = 0.5 already lies in C_beta = [1/3, 2/3].
        assert!((fit.model.beta()[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn zero_unlabeled_rows_leave_supervised_solution() {
        let labeled = LabeledSet::new(
            Matrix::from_row_slice(4, 2, &[1.0, 0.2, -0.4, 1.1, 0.9, -0.7, 0.1, 0.3]),
            Vector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]),
        )
        .unwrap();
        let x_u = Matrix::zeros(2, 2);
        let fit = fit_icls(&labeled, &x_u, false).unwrap();
        let sup = fit_ls(&labeled, false).unwrap();
        assert_eq!(fit.model.beta(), sup.beta());
    }

    #[test]
    fn objective_matches_labeled_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let l = rng.random_range(5..15);
            let u = rng.random_range(1..10);
            let d = rng.random_range(1..4);
            let labeled = LabeledSet::new(
                Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0)),
                Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5))),
            )
            .unwrap();
            let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
            let fit = fit_icls(&labeled, &x_u, true).unwrap();
            let risk = risk_hat(&fit.model, &labeled).unwrap();
            assert!(
                (fit.objective - risk).abs() <= 1e-8,
                "objective {} vs labeled risk {}",
                fit.objective,
                risk
            );
        }
    }

    #[test]
    fn labeled_risk_never_below_supervised_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let l = rng.random_range(5..20);
            let u = rng.random_range(1..12);
            let d = rng.random_range(1..4);
            let labeled = LabeledSet::new(
                Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0)),
                Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5))),
            )
            .unwrap();
            let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
            let fit = fit_icls(&labeled, &x_u, true).unwrap();
            let sup = fit_ls(&labeled, true).unwrap();
            let semi_risk = risk_hat(&fit.model, &labeled).unwrap();
            let sup_risk = risk_hat(&sup, &labeled).unwrap();
            assert!(semi_risk >= sup_risk - 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gradient_matches_finite_differences(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = rng.random_range(4..10);
            let u = rng.random_range(1..5);
            let d = rng.random_range(1..4);
            let labeled = LabeledSet::new(
                Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0)),
                Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5))),
            ).unwrap();
            let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
            let qp = build_constraint_problem(&labeled, &x_u, true).unwrap();

            let y = Vector::from_fn(u, |_, _| rng.random_range(0.2..0.8));
            let grad = qp.gradient(&y);
            let h = 1e-6;
            for i in 0..u {
                let mut hi = y.clone();
                let mut lo = y.clone();
                hi[i] += h;
                lo[i] -= h;
                let fd = (qp.objective(&hi) - qp.objective(&lo)) / (2.0 * h);
                let scale = grad[i].abs().max(fd.abs()).max(1e-8);
                prop_assert!((grad[i] - fd).abs() / scale <= 1e-5);
            }
        }

        #[test]
        fn refit_with_imputed_labels_reproduces_model(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = rng.random_range(5..12);
            let u = rng.random_range(1..6);
            let d = rng.random_range(1..3);
            let labeled = LabeledSet::new(
                Matrix::from_fn(l, d, |_, _| rng.random_range(-2.0..2.0)),
                Vector::from_fn(l, |_, _| f64::from(rng.random_bool(0.5))),
            ).unwrap();
            let x_u = Matrix::from_fn(u, d, |_, _| rng.random_range(-2.0..2.0));
            let fit = fit_icls(&labeled, &x_u, true).unwrap();
            let again = refit(&labeled, &x_u, &fit.y_u_star, true).unwrap();
            prop_assert!((again.beta() - fit.model.beta()).amax() <= 1e-8);
        }
    }
}
