//! Dense reference computations used to cross-check the sparse kernels.

use nalgebra::DMatrix;

use super::{LinalgError, Result, SparseSymmetric};

/// Upper-triangular dense Cholesky factor of `m`.
pub fn dense_cholesky_oracle(m: &SparseSymmetric) -> Result<DMatrix<f64>> {
    dense_cholesky_matrix(m.to_dense())
}

/// `ln|m|` through a dense factorization.
pub fn dense_logdet_oracle(m: &SparseSymmetric) -> Result<f64> {
    let r = dense_cholesky_oracle(m)?;
    Ok(2.0 * r.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub(crate) fn dense_cholesky_matrix(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let chol = nalgebra::Cholesky::new(m).ok_or(LinalgError::NotPositiveDefinite {
        index: n,
        value: f64::NAN,
    })?;
    Ok(chol.l().transpose())
}
