//! Small dense helpers on top of faer for the heavy products and decompositions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// `aᵀ b`
pub fn gemm_tn(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let c = to_faer(a).transpose() * to_faer(b);
    from_faer(c.as_ref())
}

/// `a b`
pub fn gemm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let c = to_faer(a) * to_faer(b);
    from_faer(c.as_ref())
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    to_faer(a)
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

/// Number of singular values at or below `rel_tol * σ_max`.
pub fn numerical_kernel_dim(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return sv.len();
    }
    sv.iter().filter(|&&s| s <= rel_tol * smax).count()
}
