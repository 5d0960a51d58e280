//! The supervised least squares classifier.
//!
//! Labels are encoded `{0,1}`; the fit is the closed-form least squares
//! solution on the (optionally intercept-augmented) design matrix, with a
//! pseudo-inverse fallback when the normal matrix is singular. Classification
//! thresholds the linear score at 0.5, ties going to class 1.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// A fitted linear model.
///
/// Plain models score `x' * beta` on the (intercept-augmented) features.
/// Centered models, as produced by the USM baseline, score
/// `(x - feature_means)' * beta + label_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    beta: Vector,
    has_intercept: bool,
    label_offset: f64,
    feature_means: Option<Vector>,
}

impl LinearModel {
    /// A model that scores the intercept-augmented features directly.
    pub fn plain(beta: Vector, has_intercept: bool) -> Result<Self> {
        linalg::ensure_finite_vector(&beta, "LinearModel: beta")?;
        if has_intercept && beta.is_empty() {
            return Err(Error::invalid("LinearModel: intercept model needs a coefficient"));
        }
        Ok(LinearModel {
            beta,
            has_intercept,
            label_offset: 0.0,
            feature_means: None,
        })
    }

    /// A centered model: scores are taken against centered features and
    /// shifted back by the label mean.
    pub fn centered(beta: Vector, feature_means: Vector, label_offset: f64) -> Result<Self> {
        linalg::ensure_finite_vector(&beta, "LinearModel: beta")?;
        linalg::ensure_finite_vector(&feature_means, "LinearModel: feature means")?;
        if !label_offset.is_finite() {
            return Err(Error::NonFinite("LinearModel: label offset".into()));
        }
        if beta.len() != feature_means.len() {
            return Err(Error::dims(format!(
                "LinearModel: {} coefficients vs {} feature means",
                beta.len(),
                feature_means.len()
            )));
        }
        Ok(LinearModel {
            beta,
            has_intercept: false,
            label_offset,
            feature_means: Some(feature_means),
        })
    }

    pub fn beta(&self) -> &Vector {
        &self.beta
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn label_offset(&self) -> f64 {
        self.label_offset
    }

    pub fn feature_means(&self) -> Option<&Vector> {
        self.feature_means.as_ref()
    }

    /// Number of raw feature columns the model consumes.
    pub fn feature_dim(&self) -> usize {
        if self.has_intercept {
            self.beta.len() - 1
        } else {
            self.beta.len()
        }
    }

    /// Linear scores for a raw feature matrix (one row per object).
    pub fn score(&self, x: &Matrix) -> Result<Vector> {
        if x.ncols() != self.feature_dim() {
            return Err(Error::dims(format!(
                "score: model expects {} features, got {}",
                self.feature_dim(),
                x.ncols()
            )));
        }
        linalg::ensure_finite_matrix(x, "score: features")?;
        match &self.feature_means {
            Some(means) => {
                let (centered, _) = linalg::center_columns(x, Some(means))?;
                let mut s = centered * &self.beta;
                s.add_scalar_mut(self.label_offset);
                Ok(s)
            }
            None => Ok(design_matrix(x, self.has_intercept) * &self.beta),
        }
    }
}

/// A labeled training set: raw features (no intercept column) and `{0,1}` labels.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    x: Matrix,
    y: Vector,
}

impl LabeledSet {
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("LabeledSet: no rows"));
        }
        if x.nrows() != y.len() {
            return Err(Error::dims(format!(
                "LabeledSet: {} feature rows vs {} labels",
                x.nrows(),
                y.len()
            )));
        }
        linalg::ensure_finite_matrix(&x, "LabeledSet: features")?;
        if !y.iter().all(|&v| v == 0.0 || v == 1.0) {
            return Err(Error::invalid("LabeledSet: labels must be 0 or 1"));
        }
        Ok(LabeledSet { x, y })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Prepend a constant-1 column when an intercept is requested.
pub(crate) fn design_matrix(x: &Matrix, intercept: bool) -> Matrix {
    if !intercept {
        return x.clone();
    }
    let mut d = Matrix::zeros(x.nrows(), x.ncols() + 1);
    d.column_mut(0).fill(1.0);
    d.view_mut((0, 1), (x.nrows(), x.ncols())).copy_from(x);
    d
}

/// Least squares fit on arbitrary real-valued targets.
///
/// This is the work-horse shared with the semi-supervised learners, which fit
/// against fractional imputed labels.
pub(crate) fn fit_linear(x: &Matrix, targets: &Vector, intercept: bool) -> Result<LinearModel> {
    if x.nrows() == 0 {
        return Err(Error::invalid("fit: empty training set"));
    }
    if x.nrows() != targets.len() {
        return Err(Error::dims(format!(
            "fit: {} rows vs {} targets",
            x.nrows(),
            targets.len()
        )));
    }
    linalg::ensure_finite_vector(targets, "fit: targets")?;
    let design = design_matrix(x, intercept);
    let beta = linalg::pinv_solve(&design, targets)?;
    LinearModel::plain(beta, intercept)
}

/// Closed-form least squares fit of a `{0,1}`-labeled set.
///
/// The pseudo-inverse path engages automatically whenever the normal matrix is
/// singular (fewer rows than columns, collinear features).
pub fn fit_ls(data: &LabeledSet, intercept: bool) -> Result<LinearModel> {
    fit_linear(data.x(), data.y(), intercept)
}

/// Mean squared deviation of the model scores from the labels.
pub fn risk_hat(model: &LinearModel, data: &LabeledSet) -> Result<f64> {
    let scores = model.score(data.x())?;
    let resid = scores - data.y();
    Ok(resid.norm_squared() / data.len() as f64)
}

/// Hard class assignments: class 1 iff the score is at least 0.5.
pub fn classify(model: &LinearModel, x: &Matrix) -> Result<Vector> {
    let scores = model.score(x)?;
    Ok(scores.map(|s| if s >= 0.5 { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point_set() -> LabeledSet {
        LabeledSet::new(
            Matrix::from_column_slice(2, 1, &[1.0, -1.0]),
            Vector::from_column_slice(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn fit_two_points_with_intercept() {
        let model = fit_ls(&two_point_set(), true).unwrap();
        assert!((model.beta()[0] - 0.5).abs() < 1e-12);
        assert!((model.beta()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_zero_labels_give_zero_coefficients() {
        let data = LabeledSet::new(
            Matrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.3, 0.7]),
            Vector::zeros(3),
        )
        .unwrap();
        let model = fit_ls(&data, true).unwrap();
        assert!(model.beta().amax() < 1e-14);
    }

    #[test]
    fn matches_cofactor_normal_equation_solve() {
        // 6 points, one feature plus intercept: the 2x2 normal system has a
        // closed-form cofactor inverse to check against.
        let xs = [0.4, -1.2, 2.1, 0.9, -0.3, 1.6];
        let ys = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let data = LabeledSet::new(
            Matrix::from_column_slice(6, 1, &xs),
            Vector::from_column_slice(&ys),
        )
        .unwrap();
        let model = fit_ls(&data, true).unwrap();

        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let det = n * sxx - sx * sx;
        let b0 = (sxx * sy - sx * sxy) / det;
        let b1 = (n * sxy - sx * sy) / det;

        assert!((model.beta()[0] - b0).abs() < 1e-10);
        assert!((model.beta()[1] - b1).abs() < 1e-10);
    }

    #[test]
    fn risk_examples() {
        let data = two_point_set();
        let exact = fit_ls(&data, true).unwrap();
        assert!(risk_hat(&exact, &data).unwrap() < 1e-24);

        let zero = LinearModel::plain(Vector::zeros(2), true).unwrap();
        assert!((risk_hat(&zero, &data).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn classify_thresholds_at_half() {
        let model = LinearModel::plain(Vector::from_column_slice(&[0.5, 0.5]), true).unwrap();
        let x = Matrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let classes = classify(&model, &x).unwrap();
        assert_eq!(classes.as_slice(), &[1.0, 0.0]);

        // Score exactly 0.5 resolves to class 1.
        let flat = LinearModel::plain(Vector::from_column_slice(&[0.5, 0.0]), true).unwrap();
        let classes = classify(&flat, &x).unwrap();
        assert_eq!(classes.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn classify_dimension_mismatch() {
        let model = LinearModel::plain(Vector::from_column_slice(&[0.5, 0.5]), true).unwrap();
        let x = Matrix::zeros(1, 3);
        assert!(matches!(classify(&model, &x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn fit_minimizes_empirical_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Matrix::from_fn(12, 3, |_, _| rng.random_range(-2.0..2.0));
        let y = Vector::from_fn(12, |_, _| f64::from(rng.random_bool(0.5)));
        let data = LabeledSet::new(x, y).unwrap();
        let model = fit_ls(&data, true).unwrap();
        let base = risk_hat(&model, &data).unwrap();

        for _ in 0..100 {
            let mut delta = Vector::from_fn(model.beta().len(), |_, _| rng.random_range(-1.0..1.0));
            delta *= 1e-3 / delta.norm();
            let perturbed = LinearModel::plain(model.beta() + delta, true).unwrap();
            assert!(risk_hat(&perturbed, &data).unwrap() >= base - 1e-12);
        }
    }

    #[test]
    fn classify_commutes_with_row_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Matrix::from_fn(8, 2, |_, _| rng.random_range(-3.0..3.0));
        let model = LinearModel::plain(Vector::from_column_slice(&[0.1, 0.7, -0.4]), true).unwrap();
        let forward = classify(&model, &x).unwrap();

        let perm: Vec<usize> = vec![3, 0, 7, 1, 6, 2, 5, 4];
        let permuted = Matrix::from_fn(8, 2, |i, j| x[(perm[i], j)]);
        let back = classify(&model, &permuted).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(back[i], forward[p]);
        }
    }
}
