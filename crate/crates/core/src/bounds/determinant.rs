use serde::{Deserialize, Serialize};

use super::Result;
use crate::belief::{objective_from_logdet, BeliefError, CandidateAction, GaussianBelief};
use crate::linalg::{cholesky, LinalgError, SymmetricAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub lb: f64,
    pub ub: f64,
}

/// Objective bounds without forming the posterior factor.
///
/// Lower: with new variables, the Schur complement onto the prior block
/// dominates `Λ`, giving `ln|Λ| + ln|U_newᵀU_new|`. Without new variables the
/// Minkowski inequality is used when `UᵀU` is nonsingular and `ln|Λ|`
/// otherwise. Upper: Hadamard on the diagonal of `Λ̆ + UᵀU`.
pub fn determinant_bounds(b: &GaussianBelief, a: &CandidateAction) -> Result<ObjectiveBounds> {
    let n = b.dim();
    let k = a.n_new_vars;
    if a.prior_dim() != n {
        return Err(BeliefError::DimensionMismatch {
            what: "jacobian columns",
            expected: n + k,
            found: a.jacobian.n_cols(),
        }
        .into());
    }
    let total = n + k;
    let ld_prior = b.root().logdet();

    let lb_logdet = if k > 0 {
        let mut acc = SymmetricAccumulator::new(k);
        for row in a.jacobian.rows() {
            let tail: Vec<(usize, f64)> = row
                .iter()
                .filter(|e| e.0 >= n)
                .map(|&(c, v)| (c - n, v))
                .collect();
            acc.add_outer(&tail);
        }
        let ld_new = acc
            .finish()
            .and_then(|m| cholesky(&m))
            .map_err(|_| LinalgError::RankDeficientAugmentation { index: n })?
            .logdet();
        ld_prior + ld_new
    } else if a.jacobian.n_rows() >= n {
        let mut acc = SymmetricAccumulator::new(n);
        for row in a.jacobian.rows() {
            acc.add_outer(row);
        }
        match acc.finish().and_then(|m| cholesky(&m)) {
            Ok(r) => {
                let (x, y) = (ld_prior / n as f64, r.logdet() / n as f64);
                let hi = x.max(y);
                n as f64 * (hi + ((x - hi).exp() + (y - hi).exp()).ln())
            }
            Err(_) => ld_prior,
        }
    } else {
        ld_prior
    };

    let mut diag = b.root().column_norms_squared();
    diag.resize(total, 0.0);
    for row in a.jacobian.rows() {
        for &(c, v) in row {
            diag[c] += v * v;
        }
    }
    let ub_logdet: f64 = diag.iter().map(|d| d.ln()).sum();

    Ok(ObjectiveBounds {
        lb: objective_from_logdet(lb_logdet, total),
        ub: objective_from_logdet(ub_logdet, total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{objective, VariableLayout};
    use crate::linalg::{SparseRowBlock, SparseSymmetric, UpperTriangular};
    use approx::assert_relative_eq;

    fn belief(diag: &[f64]) -> GaussianBelief {
        let m = SparseSymmetric::from_diagonal(diag).unwrap();
        GaussianBelief::from_information(vec![0.0; diag.len()], &m, VariableLayout::scalar(diag.len()))
            .unwrap()
    }

    #[test]
    fn minkowski_side() {
        let b = belief(&[2.0, 2.0]);
        let a = CandidateAction::new(0, SparseRowBlock::new(2, vec![vec![(0, 1.0)]]).unwrap(), 0, vec![])
            .unwrap();
        let bd = determinant_bounds(&b, &a).unwrap();
        assert_relative_eq!(bd.lb, objective_from_logdet(4f64.ln(), 2), epsilon = 1e-12);
        let j = objective(&b, &a).unwrap();
        assert_relative_eq!(j, objective_from_logdet(6f64.ln(), 2), epsilon = 1e-12);
        assert!(bd.lb <= j && j <= bd.ub);
    }

    #[test]
    fn hadamard_side() {
        let b = belief(&[1.0, 1.0]);
        let a = CandidateAction::new(0, SparseRowBlock::new(2, vec![vec![(0, 1.0), (1, 1.0)]]).unwrap(), 0, vec![])
            .unwrap();
        let bd = determinant_bounds(&b, &a).unwrap();
        assert_relative_eq!(bd.ub, objective_from_logdet(4f64.ln(), 2), epsilon = 1e-12);
        assert!(objective(&b, &a).unwrap() <= bd.ub);
    }

    #[test]
    fn empty_action_on_diagonal_is_tight() {
        let b = belief(&[2.0, 5.0, 0.5]);
        let a = CandidateAction::noop(0, 3).unwrap();
        let bd = determinant_bounds(&b, &a).unwrap();
        let j = objective(&b, &a).unwrap();
        assert_relative_eq!(bd.lb, j, epsilon = 1e-12);
        assert_relative_eq!(bd.ub, j, epsilon = 1e-12);
    }

    #[test]
    fn full_rank_update_uses_minkowski() {
        let b = belief(&[1.0, 1.0]);
        let u = SparseRowBlock::new(2, vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let a = CandidateAction::new(0, u, 0, vec![]).unwrap();
        let bd = determinant_bounds(&b, &a).unwrap();
        // |I + I| = 4 and Minkowski is tight for proportional matrices
        assert_relative_eq!(bd.lb, objective_from_logdet(4f64.ln(), 2), epsilon = 1e-12);
    }

    #[test]
    fn augmentation_lower_bound() {
        let r = UpperTriangular::new(vec![2.0, 1.0], vec![vec![(1, 0.5)], vec![]]).unwrap();
        let b = GaussianBelief::new(vec![0.0; 2], r, VariableLayout::scalar(2)).unwrap();
        let u = SparseRowBlock::new(
            4,
            vec![vec![(1, -1.0), (2, 1.0)], vec![(2, -0.5), (3, 2.0)], vec![(0, 0.3), (3, 1.0)]],
        )
        .unwrap();
        let a = CandidateAction::new(0, u, 2, vec![0.0, 0.0]).unwrap();
        let bd = determinant_bounds(&b, &a).unwrap();
        let j = objective(&b, &a).unwrap();
        assert!(bd.lb <= j + 1e-12, "{} > {}", bd.lb, j);
        assert!(j <= bd.ub + 1e-12);
    }
}
