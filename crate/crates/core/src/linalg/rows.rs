use nalgebra::DMatrix;

use super::{check_sorted_row, LinalgError, Result, SparseRow};

/// A block of sparse rows, e.g. a stacked whitened Jacobian.
///
/// Stored entries are structural: an explicitly stored `0.0` still counts as
/// support for its column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRowBlock {
    n_cols: usize,
    rows: Vec<SparseRow>,
}

impl SparseRowBlock {
    pub fn new(n_cols: usize, rows: Vec<SparseRow>) -> Result<Self> {
        if n_cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        for (i, row) in rows.iter().enumerate() {
            check_sorted_row(i, row, n_cols)?;
        }
        Ok(Self { n_cols, rows })
    }

    pub fn empty(n_cols: usize) -> Result<Self> {
        Self::new(n_cols, Vec::new())
    }

    /// Dense rows with exact zeros dropped.
    pub fn from_dense_rows(n_cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            out.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect(),
            );
        }
        Self::new(n_cols, out)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Columns holding at least one stored entry, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_cols];
        for row in &self.rows {
            for &(c, _) in row {
                seen[c] = true;
            }
        }
        (0..self.n_cols).filter(|&c| seen[c]).collect()
    }

    /// Same rows, padded with trailing zero columns.
    pub fn widen(&self, n_cols: usize) -> Result<Self> {
        if n_cols < self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_cols,
                found: n_cols,
            });
        }
        Ok(Self {
            n_cols,
            rows: self.rows.clone(),
        })
    }

    /// Stacks blocks vertically; narrower blocks are widened to the widest.
    pub fn stack(blocks: &[SparseRowBlock]) -> Result<Self> {
        let n_cols = blocks
            .iter()
            .map(|b| b.n_cols)
            .max()
            .ok_or(LinalgError::EmptyMatrix)?;
        let rows = blocks.iter().flat_map(|b| b.rows.iter().cloned()).collect();
        Ok(Self { n_cols, rows })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.n_cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }
}
