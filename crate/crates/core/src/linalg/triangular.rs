use nalgebra::DMatrix;

use super::{check_sorted_row, LinalgError, Permutation, Result, SparseRow, SparseSymmetric};

/// Upper-triangular factor with a dense positive diagonal and sorted sparse
/// off-diagonal rows (columns strictly greater than the row index).
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    diag: Vec<f64>,
    off: Vec<SparseRow>,
}

impl UpperTriangular {
    pub fn new(diag: Vec<f64>, off: Vec<SparseRow>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if off.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: off.len(),
            });
        }
        for (i, &d) in diag.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { index: i, value: d });
            }
        }
        for (i, row) in off.iter().enumerate() {
            check_sorted_row(i, row, n)?;
            if let Some(&(c, _)) = row.first() {
                if c <= i {
                    return Err(LinalgError::ShapeViolation { row: i, col: c });
                }
            }
        }
        Ok(Self { diag, off })
    }

    pub(crate) fn from_parts_unchecked(diag: Vec<f64>, off: Vec<SparseRow>) -> Self {
        debug_assert_eq!(diag.len(), off.len());
        Self { diag, off }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(vec![1.0; dim])
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        Self::new(diag, vec![Vec::new(); n])
    }

    /// Reads the upper triangle of a dense square matrix; exact zeros above
    /// the diagonal are not stored and the strict lower triangle must be zero.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)] != 0.0 {
                    return Err(LinalgError::ShapeViolation { row: i, col: j });
                }
            }
            diag.push(m[(i, i)]);
            off.push(
                (i + 1..n)
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect(),
            );
        }
        Self::new(diag, off)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i`.
    pub fn off_row(&self, i: usize) -> &[(usize, f64)] {
        &self.off[i]
    }

    pub(crate) fn into_parts(self) -> (Vec<f64>, Vec<SparseRow>) {
        (self.diag, self.off)
    }

    /// Stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.dim() + self.off.iter().map(Vec::len).sum::<usize>()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        if j < i {
            return 0.0;
        }
        let row = &self.off[i];
        row.binary_search_by(|e| e.0.cmp(&j))
            .map(|k| row[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.off[i] {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `ln|RᵀR|`.
    pub fn logdet(&self) -> f64 {
        logdet_triangular(self)
    }

    /// The symmetric product `RᵀR`, keeping the structural pattern.
    pub fn gram(&self) -> SparseSymmetric {
        let n = self.dim();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.off.iter().enumerate() {
            for &(j, _) in row {
                cols[j].push(i);
            }
        }
        let mut cursor = vec![0usize; n];
        let mut work = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut pattern = Vec::new();
        let mut entries = Vec::with_capacity(self.nnz());
        for k in 0..n {
            pattern.clear();
            let dk = self.diag[k];
            work[k] = dk * dk;
            mark[k] = k;
            for &(j, v) in &self.off[k] {
                work[j] = dk * v;
                mark[j] = k;
                pattern.push(j);
            }
            for &i in &cols[k] {
                let row = &self.off[i];
                let rik = row[cursor[i]].1;
                work[k] += rik * rik;
                for &(j, v) in &row[cursor[i] + 1..] {
                    if mark[j] != k {
                        mark[j] = k;
                        work[j] = 0.0;
                        pattern.push(j);
                    }
                    work[j] += rik * v;
                }
                cursor[i] += 1;
            }
            pattern.sort_unstable();
            entries.push((k, k, work[k]));
            entries.extend(pattern.iter().map(|&j| (k, j, work[j])));
        }
        SparseSymmetric::from_sorted_unchecked(n, entries)
    }

    /// Squared Euclidean norms of each column of `R`, i.e. the diagonal of `RᵀR`.
    pub fn column_norms_squared(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().map(|d| d * d).collect();
        for row in &self.off {
            for &(j, v) in row {
                out[j] += v * v;
            }
        }
        out
    }

    /// Solves `Rᵀ x = b` by forward substitution.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        for i in 0..n {
            x[i] /= self.diag[i];
            let xi = x[i];
            if xi != 0.0 {
                for &(j, v) in &self.off[i] {
                    x[j] -= v * xi;
                }
            }
        }
        Ok(x)
    }

    /// Solves `R x = b` by back substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let s: f64 = self.off[i].iter().map(|&(j, v)| v * x[j]).sum();
            x[i] = (x[i] - s) / self.diag[i];
        }
        Ok(x)
    }

    /// Pattern of `RᵀR` counted over the full symmetric matrix.
    pub fn information_nnz(&self) -> usize {
        let g = self.gram();
        2 * g.nnz() - g.dim()
    }
}

/// `ln|RᵀR| = 2·Σ ln R_ii`.
pub fn logdet_triangular(r: &UpperTriangular) -> f64 {
    2.0 * r.diag.iter().map(|d| d.ln()).sum::<f64>()
}

/// Relabels a factor whose `sparsified` rows are diagonal-only.
///
/// `p` maps the current ordering to the target one: the result satisfies
/// `resultᵀ·result = permute_symmetric(rᵀr, p)`. Row `a` of `r` becomes row
/// `p.inverse_map()[a]`, with its columns relabelled the same way.
pub fn permute_triangular_back(
    r: &UpperTriangular,
    p: &Permutation,
    sparsified: &[usize],
) -> Result<UpperTriangular> {
    let n = r.dim();
    if p.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    for &s in sparsified {
        if s >= n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: s + 1,
            });
        }
        if let Some(&(c, _)) = r.off[s].first() {
            return Err(LinalgError::ShapeViolation { row: s, col: c });
        }
    }
    let inv = p.inverse_map();
    let mut diag = vec![0.0; n];
    let mut off: Vec<SparseRow> = vec![Vec::new(); n];
    for a in 0..n {
        let target = inv[a];
        diag[target] = r.diag[a];
        let mut row: SparseRow = Vec::with_capacity(r.off[a].len());
        for &(b, v) in &r.off[a] {
            let col = inv[b];
            if col < target {
                return Err(LinalgError::ShapeViolation { row: target, col });
            }
            row.push((col, v));
        }
        row.sort_unstable_by_key(|e| e.0);
        off[target] = row;
    }
    Ok(UpperTriangular { diag, off })
}
