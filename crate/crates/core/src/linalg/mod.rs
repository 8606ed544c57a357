//! Sparse symmetric and triangular kernels.
//!
//! Symmetric matrices are stored as upper-triangle coordinate lists and
//! triangular factors as compressed sorted rows with a dense diagonal. Both
//! layouts keep structural nonzero counts exact, which the planning reports
//! rely on.

mod cholesky;
mod dense;
pub mod market;
mod permutation;
mod rows;
mod symmetric;
mod triangular;
mod update;

pub use cholesky::{cholesky, cholesky_with_pivot_floor, PIVOT_FLOOR};
pub use dense::{dense_cholesky_oracle, dense_logdet_oracle};
pub use permutation::Permutation;
pub use rows::SparseRowBlock;
pub use symmetric::{SparseSymmetric, SymmetricAccumulator};
pub use triangular::{logdet_triangular, permute_triangular_back, UpperTriangular};
pub use update::lowrank_update;

pub use symmetric::permute_symmetric;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite: pivot {index} is {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry ({row}, {col}) would land below the diagonal")]
    ShapeViolation { row: usize, col: usize },

    #[error("newly introduced variable {index} has no supporting row")]
    RankDeficientAugmentation { index: usize },

    #[error("invalid entry ({row}, {col}): {reason}")]
    InvalidEntry {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("matrix dimension must be positive")]
    EmptyMatrix,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Sorted sparse row: `(column, value)` pairs with strictly increasing columns.
pub type SparseRow = Vec<(usize, f64)>;

pub(crate) fn check_sorted_row(row_index: usize, row: &[(usize, f64)], n_cols: usize) -> Result<()> {
    let mut prev: Option<usize> = None;
    for &(col, value) in row {
        if col >= n_cols {
            return Err(LinalgError::InvalidEntry {
                row: row_index,
                col,
                reason: "column out of range",
            });
        }
        if !value.is_finite() {
            return Err(LinalgError::InvalidEntry {
                row: row_index,
                col,
                reason: "non-finite value",
            });
        }
        if let Some(p) = prev {
            if col <= p {
                return Err(LinalgError::InvalidEntry {
                    row: row_index,
                    col,
                    reason: "columns not strictly increasing",
                });
            }
        }
        prev = Some(col);
    }
    Ok(())
}
