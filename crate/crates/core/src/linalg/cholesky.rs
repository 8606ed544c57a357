use super::{LinalgError, Result, SparseRow, SparseSymmetric, UpperTriangular};

/// Smallest accepted squared pivot.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Sparse Cholesky `m = RᵀR` in the given ordering.
pub fn cholesky(m: &SparseSymmetric) -> Result<UpperTriangular> {
    cholesky_with_pivot_floor(m, PIVOT_FLOOR)
}

/// Row-by-row factorization: row `k` of `R` is assembled from row `k` of `m`
/// minus the contributions of earlier rows that touch column `k`. The fill
/// pattern is symbolic, so cancellations to exactly zero stay stored.
pub fn cholesky_with_pivot_floor(m: &SparseSymmetric, floor: f64) -> Result<UpperTriangular> {
    let n = m.dim();
    let mut diag = vec![0.0; n];
    let mut off: Vec<SparseRow> = vec![Vec::new(); n];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cursor = vec![0usize; n];
    let mut work = vec![0.0; n];
    let mut mark = vec![usize::MAX; n];
    let mut pattern: Vec<usize> = Vec::new();

    for k in 0..n {
        pattern.clear();
        work[k] = 0.0;
        mark[k] = k;
        for &(_, j, v) in m.row(k) {
            if j == k {
                work[k] = v;
            } else {
                work[j] = v;
                mark[j] = k;
                pattern.push(j);
            }
        }
        for &i in &cols[k] {
            let row = &off[i];
            let rik = row[cursor[i]].1;
            work[k] -= rik * rik;
            for &(j, v) in &row[cursor[i] + 1..] {
                if mark[j] != k {
                    mark[j] = k;
                    work[j] = 0.0;
                    pattern.push(j);
                }
                work[j] -= rik * v;
            }
            cursor[i] += 1;
        }
        let d = work[k];
        if !d.is_finite() || d <= floor {
            return Err(LinalgError::NotPositiveDefinite { index: k, value: d });
        }
        let rkk = d.sqrt();
        diag[k] = rkk;
        pattern.sort_unstable();
        let mut row = Vec::with_capacity(pattern.len());
        for &j in &pattern {
            row.push((j, work[j] / rkk));
            cols[j].push(k);
        }
        off[k] = row;
    }
    Ok(UpperTriangular::from_parts_unchecked(diag, off))
}
