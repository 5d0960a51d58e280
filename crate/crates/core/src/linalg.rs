//! Dense linear-algebra primitives shared by all classifiers.
//!
//! Everything is stored dense; the problem sizes involved (hundreds of rows,
//! at most a few hundred columns) never warrant sparsity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Singular values below `SV_RELATIVE_CUTOFF * sigma_max` are treated as zero
/// when forming pseudo-inverses and least-squares solutions.
pub const SV_RELATIVE_CUTOFF: f64 = 1e-12;

pub(crate) fn ensure_finite_matrix(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn ensure_finite_vector(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Minimum-norm least-squares solution of `a * x ~ b` via SVD.
///
/// Singular values below `SV_RELATIVE_CUTOFF` times the largest singular value
/// are dropped, so the result degrades gracefully to the pseudo-inverse
/// solution for rank-deficient systems and reproduces the exact inverse when
/// `a` has full column rank.
pub fn pinv_solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != b.len() {
        return Err(Error::dims(format!(
            "pinv_solve: matrix has {} rows but rhs has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    ensure_finite_matrix(a, "pinv_solve: matrix")?;
    ensure_finite_vector(b, "pinv_solve: rhs")?;

    let svd = a.clone().svd(true, true);
    let eps = sv_cutoff(&svd.singular_values);
    let x = svd
        .solve(b, eps)
        .map_err(|e| Error::invalid(format!("pinv_solve: {e}")))?;
    Ok(Vector::from_column_slice(x.as_slice()))
}

/// Moore-Penrose pseudo-inverse with the same relative singular-value cutoff
/// as [`pinv_solve`].
pub fn pinv(m: &Matrix) -> Result<Matrix> {
    ensure_finite_matrix(m, "pinv: matrix")?;
    let svd = m.clone().svd(true, true);
    let eps = sv_cutoff(&svd.singular_values);
    svd.pseudo_inverse(eps)
        .map_err(|e| Error::invalid(format!("pinv: {e}")))
}

fn sv_cutoff(singular_values: &DVector<f64>) -> f64 {
    let sigma_max = singular_values.iter().copied().fold(0.0_f64, f64::max);
    SV_RELATIVE_CUTOFF * sigma_max
}

/// Subtract per-column means from `m`.
///
/// With `means = None` the means are computed from `m` itself and returned
/// alongside the centered matrix; supplying `means` reuses a previously
/// computed centering (as needed when scoring against a centered model).
pub fn center_columns(m: &Matrix, means: Option<&Vector>) -> Result<(Matrix, Vector)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::invalid("center_columns: empty matrix"));
    }
    let means = match means {
        Some(v) => {
            if v.len() != m.ncols() {
                return Err(Error::dims(format!(
                    "center_columns: {} means for {} columns",
                    v.len(),
                    m.ncols()
                )));
            }
            v.clone()
        }
        None => column_means(m),
    };
    let mut centered = m.clone();
    for j in 0..centered.ncols() {
        let mu = means[j];
        for i in 0..centered.nrows() {
            centered[(i, j)] -= mu;
        }
    }
    Ok((centered, means))
}

pub fn column_means(m: &Matrix) -> Vector {
    let n = m.nrows() as f64;
    Vector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// Row-wise concatenation of two matrices with equal column counts.
pub fn vstack(top: &Matrix, bottom: &Matrix) -> Result<Matrix> {
    if top.ncols() != bottom.ncols() {
        return Err(Error::dims(format!(
            "vstack: {} vs {} columns",
            top.ncols(),
            bottom.ncols()
        )));
    }
    let mut out = Matrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
        .copy_from(bottom);
    Ok(out)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &Matrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
