use super::{LinalgError, Result, SparseRow, SparseRowBlock, UpperTriangular};

/// Folds the rows of `u` into `r` with Givens rotations, returning `R⁺` with
/// `R⁺ᵀR⁺ = R̆ᵀR̆ + uᵀu`, where `R̆` is `r` padded with `n_new` zero rows and
/// columns.
///
/// Each row of `u` is eliminated left to right against the factor row of its
/// leading column, so only factor rows reachable from `u`'s pattern change.
pub fn lowrank_update(
    r: &UpperTriangular,
    u: &SparseRowBlock,
    n_new: usize,
) -> Result<UpperTriangular> {
    let n_old = r.dim();
    let n = n_old + n_new;
    if u.n_cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: u.n_cols(),
        });
    }
    let (mut diag, mut off) = r.clone().into_parts();
    diag.resize(n, 0.0);
    off.resize(n, Vec::new());

    let mut v: SparseRow = Vec::new();
    let mut scratch_row: SparseRow = Vec::new();
    let mut scratch_v: SparseRow = Vec::new();
    for input in u.rows() {
        v.clear();
        v.extend(input.iter().copied().filter(|e| e.1 != 0.0));
        let mut start = 0;
        while start < v.len() {
            let (c, b) = v[start];
            start += 1;
            if b == 0.0 {
                continue;
            }
            let rc = diag[c];
            let h = rc.hypot(b);
            let cs = rc / h;
            let sn = b / h;
            diag[c] = h;
            rotate(&off[c], &v[start..], cs, sn, &mut scratch_row, &mut scratch_v);
            std::mem::swap(&mut off[c], &mut scratch_row);
            v.clear();
            v.extend_from_slice(&scratch_v);
            start = 0;
        }
    }

    for (index, &d) in diag.iter().enumerate().skip(n_old) {
        if d.is_nan() || d <= 0.0 {
            return Err(LinalgError::RankDeficientAugmentation { index });
        }
    }
    Ok(UpperTriangular::from_parts_unchecked(diag, off))
}

/// Merges the tails of a factor row `a` and an update row `b` under a
/// rotation: new factor row `cs·a + sn·b` keeps the union pattern, new update
/// row `cs·b − sn·a` drops exact zeros.
fn rotate(
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    cs: f64,
    sn: f64,
    row_out: &mut SparseRow,
    v_out: &mut SparseRow,
) {
    row_out.clear();
    v_out.clear();
    let (mut i, mut j) = (0, 0);
    loop {
        let (col, x, y) = match (a.get(i), b.get(j)) {
            (Some(&(ca, xa)), Some(&(cb, yb))) => {
                if ca < cb {
                    i += 1;
                    (ca, xa, 0.0)
                } else if cb < ca {
                    j += 1;
                    (cb, 0.0, yb)
                } else {
                    i += 1;
                    j += 1;
                    (ca, xa, yb)
                }
            }
            (Some(&(ca, xa)), None) => {
                i += 1;
                (ca, xa, 0.0)
            }
            (None, Some(&(cb, yb))) => {
                j += 1;
                (cb, 0.0, yb)
            }
            (None, None) => break,
        };
        row_out.push((col, cs * x + sn * y));
        let w = cs * y - sn * x;
        if w != 0.0 {
            v_out.push((col, w));
        }
    }
}
