use serde::{Deserialize, Serialize};

use super::{BoundsError, Result};

/// Known relation between the original objective `J` and the simplified `J_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    None,
    /// `J ≥ J_s` for every candidate.
    Overestimates,
    /// `J ≤ J_s` for every candidate.
    Underestimates,
}

/// Bound on the loss of acting on the simplified choice `simplified_best`.
///
/// * `None`: `max UB − LB(best)`
/// * `Overestimates`: `max UB − J_s(best)`
/// * `Underestimates`: `J_s(best) − LB(best)`
pub fn post_solution_loss_bound(
    values_simp: &[f64],
    simplified_best: usize,
    ub_per_candidate: &[f64],
    lb_simplified_best: f64,
    monotonicity: Monotonicity,
) -> Result<f64> {
    if values_simp.len() != ub_per_candidate.len() {
        return Err(BoundsError::LengthMismatch {
            left: values_simp.len(),
            right: ub_per_candidate.len(),
        });
    }
    if simplified_best >= values_simp.len() {
        return Err(BoundsError::IndexOutOfRange {
            index: simplified_best,
            len: values_simp.len(),
        });
    }
    let max_ub = ub_per_candidate
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = values_simp[simplified_best];
    let bound = match monotonicity {
        Monotonicity::None => max_ub - lb_simplified_best,
        Monotonicity::Overestimates => max_ub - chosen,
        Monotonicity::Underestimates => chosen - lb_simplified_best,
    };
    if bound.is_nan() || bound < 0.0 {
        return Err(BoundsError::InconsistentBounds(bound));
    }
    Ok(bound)
}
