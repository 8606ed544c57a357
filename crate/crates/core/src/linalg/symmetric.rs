use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{LinalgError, Permutation, Result};

/// Symmetric matrix stored as its upper triangle in coordinate form.
///
/// Entries are kept sorted by `(row, col)` with `row <= col`; a row pointer
/// array gives per-row slices without a second copy.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
}

impl SparseSymmetric {
    /// Builds from upper-triangle triplets. Order does not matter; duplicates,
    /// lower-triangle coordinates and non-finite values are rejected.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        for &(row, col, value) in &entries {
            if col >= dim {
                return Err(LinalgError::InvalidEntry {
                    row,
                    col,
                    reason: "index out of range",
                });
            }
            if row > col {
                return Err(LinalgError::InvalidEntry {
                    row,
                    col,
                    reason: "coordinate below the diagonal",
                });
            }
            if !value.is_finite() {
                return Err(LinalgError::InvalidEntry {
                    row,
                    col,
                    reason: "non-finite value",
                });
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(LinalgError::InvalidEntry {
                    row: pair[0].0,
                    col: pair[0].1,
                    reason: "duplicate coordinate",
                });
            }
        }
        Ok(Self::from_sorted_unchecked(dim, entries))
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; dim + 1];
        for &(row, _, _) in &entries {
            row_ptr[row + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            entries,
            row_ptr,
        }
    }

    /// Reads the upper triangle of a dense matrix, keeping exact nonzeros.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_triplets(
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored upper-triangle entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Stored entries of row `i` (columns `>= i`), sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let row = self.row(r);
        row.binary_search_by(|e| e.1.cmp(&c))
            .map(|k| row[k].2)
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Accumulates symmetric contributions (e.g. `JᵀJ` of factor blocks) before
/// freezing them into a [`SparseSymmetric`].
#[derive(Debug, Clone, Default)]
pub struct SymmetricAccumulator {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SymmetricAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.entries.entry(key).or_insert(0.0) += value;
    }

    /// Adds `rowᵀ·row` for one sparse row.
    pub fn add_outer(&mut self, row: &[(usize, f64)]) {
        for (a, &(ca, va)) in row.iter().enumerate() {
            for &(cb, vb) in &row[a..] {
                self.add(ca, cb, va * vb);
            }
        }
    }

    pub fn finish(self) -> Result<SparseSymmetric> {
        SparseSymmetric::from_triplets(
            self.dim,
            self.entries.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        )
    }
}

/// Symmetric permutation: `output(i, j) = m(p(i), p(j))`.
pub fn permute_symmetric(m: &SparseSymmetric, p: &Permutation) -> Result<SparseSymmetric> {
    if p.dim() != m.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.dim(),
            found: p.dim(),
        });
    }
    let inv = p.inverse_map();
    let mut entries: Vec<(usize, usize, f64)> = m
        .entries
        .iter()
        .map(|&(r, c, v)| {
            let (a, b) = (inv[r], inv[c]);
            if a <= b {
                (a, b, v)
            } else {
                (b, a, v)
            }
        })
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    Ok(SparseSymmetric::from_sorted_unchecked(m.dim(), entries))
}
