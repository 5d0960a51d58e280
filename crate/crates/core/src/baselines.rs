//! Comparison learners: self-learning, updated-second-moment (USM) and the
//! oracle fit on true labels.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::supervised::{classify, fit_ls, LabeledSet, LinearModel};

/// Iteration cap for the self-learning refit loop.
pub const SELF_LEARNING_CAP: usize = 100;

/// Result of the self-learning procedure.
#[derive(Debug, Clone)]
pub struct SelfLearnFit {
    pub model: LinearModel,
    /// Hard labels the final model was fitted with; refitting on them
    /// reproduces `model`.
    pub imputed: Vector,
    /// Number of refits performed after the initial supervised fit.
    pub iterations: usize,
    pub converged: bool,
}

fn to_bits(labels: &Vector) -> Vec<u8> {
    labels.iter().map(|&v| (v != 0.0) as u8).collect()
}

/// Iteratively impute hard labels on the unlabeled rows and refit until the
/// imputation reaches a fixed point, revisits an earlier labeling, or the cap
/// is hit. Every unlabeled point participates in every round.
pub fn fit_self_learning(
    labeled: &LabeledSet,
    x_u: &Matrix,
    intercept: bool,
) -> Result<SelfLearnFit> {
    if x_u.ncols() != labeled.dim() && x_u.nrows() > 0 {
        return Err(Error::dims(format!(
            "self-learning: labeled data has {} features, unlabeled has {}",
            labeled.dim(),
            x_u.ncols()
        )));
    }
    let mut model = fit_ls(labeled, intercept)?;
    if x_u.nrows() == 0 {
        return Ok(SelfLearnFit {
            model,
            imputed: Vector::zeros(0),
            iterations: 0,
            converged: true,
        });
    }

    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut fitted_labels: Option<Vector> = None;
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let predicted = classify(&model, x_u)?;
        if fitted_labels.as_ref() == Some(&predicted) {
            converged = true;
            break;
        }
        let key = to_bits(&predicted);
        if seen.contains(&key) || iterations >= SELF_LEARNING_CAP {
            // A revisit of an older labeling is a cycle, not a fixed point.
            break;
        }
        seen.insert(key);
        model = crate::icls::refit(labeled, x_u, &predicted, intercept)?;
        fitted_labels = Some(predicted);
        iterations += 1;
    }

    Ok(SelfLearnFit {
        model,
        imputed: fitted_labels.unwrap_or_else(|| Vector::zeros(x_u.nrows())),
        iterations,
        converged,
    })
}

/// Updated-second-moment least squares.
///
/// The labeled normal equations keep their right-hand side but swap in the
/// second-moment matrix of all rows, scaled by `L/(L+U)`. Features are
/// centered by the combined mean and labels by their own mean, so predictions
/// do not depend on which class is encoded as 1.
pub fn fit_usm(labeled: &LabeledSet, x_u: &Matrix) -> Result<LinearModel> {
    if x_u.nrows() > 0 && x_u.ncols() != labeled.dim() {
        return Err(Error::dims(format!(
            "usm: labeled data has {} features, unlabeled has {}",
            labeled.dim(),
            x_u.ncols()
        )));
    }
    linalg::ensure_finite_matrix(x_u, "usm: unlabeled features")?;

    let l = labeled.len() as f64;
    let total = labeled.len() + x_u.nrows();
    let all = if x_u.nrows() == 0 {
        labeled.x().clone()
    } else {
        linalg::vstack(labeled.x(), x_u)?
    };
    let means = linalg::column_means(&all);
    let (all_centered, _) = linalg::center_columns(&all, Some(&means))?;
    let (x_centered, _) = linalg::center_columns(labeled.x(), Some(&means))?;

    let y_mean = labeled.y().sum() / l;
    let y_centered = labeled.y().add_scalar(-y_mean);

    let scaled_second_moment =
        (all_centered.transpose() * &all_centered) * (l / total as f64);
    let rhs = x_centered.transpose() * y_centered;
    let beta = linalg::pinv_solve(&scaled_second_moment, &rhs)?;

    LinearModel::centered(beta, means, y_mean)
}

/// Supervised fit on the labeled rows plus the unlabeled rows with their true
/// labels: the unattainable upper bound.
pub fn fit_oracle(
    labeled: &LabeledSet,
    x_u: &Matrix,
    y_u_true: &Vector,
    intercept: bool,
) -> Result<LinearModel> {
    if y_u_true.len() != x_u.nrows() {
        return Err(Error::dims(format!(
            "oracle: {} unlabeled rows vs {} labels",
            x_u.nrows(),
            y_u_true.len()
        )));
    }
    if !y_u_true.iter().all(|&v| v == 0.0 || v == 1.0) {
        return Err(Error::invalid("oracle: true labels must be 0 or 1"));
    }
    if x_u.nrows() == 0 {
        return fit_ls(labeled, intercept);
    }
    crate::icls::refit(labeled, x_u, y_u_true, intercept)
}
