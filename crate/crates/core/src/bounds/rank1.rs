use super::{BoundsError, Result};
use crate::belief::{CandidateAction, GaussianBelief};
use crate::linalg::UpperTriangular;
use crate::sparsify::{block_scalars, InvolvementMask};

/// Largest squared Jacobian entry over all candidates.
pub fn rank1_alpha(candidates: &[CandidateAction]) -> f64 {
    candidates
        .iter()
        .flat_map(|a| a.jacobian.rows().iter().flatten())
        .map(|&(_, v)| v * v)
        .fold(0.0, f64::max)
}

/// Offset bound for single-row candidates:
/// `ln(1 + α·Σ_{i,j∈Inv} |(Λ⁻¹ − Λ_s⁻¹)_ij|)`.
///
/// With `x = u(Λ⁻¹ − Λ_s⁻¹)uᵀ` and `y = 1 + uΛ_s⁻¹uᵀ`, both `y` and `y + x`
/// are at least one, so `|ln(y + x) − ln y| ≤ ln(1 + |x|)`, and
/// `|x| ≤ α·Σ|D_ij|` over the involved scalars. The value bounds the
/// log-determinant offset and therefore also the objective offset, which is
/// half of it.
pub fn rank1_offset_bound(
    b: &GaussianBelief,
    b_s: &GaussianBelief,
    candidates: &[CandidateAction],
    mask: &InvolvementMask,
    alpha: f64,
) -> Result<f64> {
    if b.dim() != b_s.dim() {
        return Err(BoundsError::LengthMismatch {
            left: b.dim(),
            right: b_s.dim(),
        });
    }
    for a in candidates {
        if a.jacobian.n_rows() != 1 {
            return Err(BoundsError::NotRankOne {
                candidate: a.id,
                rows: a.jacobian.n_rows(),
            });
        }
        if a.n_new_vars != 0 {
            return Err(BoundsError::AugmentingCandidate { candidate: a.id });
        }
    }
    let required = rank1_alpha(candidates);
    if alpha.is_nan() || alpha < required {
        return Err(BoundsError::AlphaTooSmall { alpha, required });
    }
    let inv = block_scalars(b.layout(), &mask.involved_blocks);
    let mut total = 0.0;
    for &j in &inv {
        let c = covariance_column(b.root(), j)?;
        let cs = covariance_column(b_s.root(), j)?;
        total += inv.iter().map(|&i| (c[i] - cs[i]).abs()).sum::<f64>();
    }
    Ok((alpha * total).ln_1p())
}

fn covariance_column(r: &UpperTriangular, j: usize) -> Result<Vec<f64>> {
    let mut e = vec![0.0; r.dim()];
    e[j] = 1.0;
    let w = r.solve_transpose(&e)?;
    Ok(r.solve(&w)?)
}
