use serde::{Deserialize, Serialize};

use super::{Result, ScenarioError};
use crate::linalg::SparseRow;

/// Planar pose: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn distance_sq(&self, other: &Pose2) -> f64 {
        (other.x - self.x).powi(2) + (other.y - self.y).powi(2)
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    /// Absolute prior on pose `i` (`j == i`).
    Prior,
    Odom,
    Loop,
}

/// Whitened factor between poses `i` and `j`, with the residual expressed in
/// the frame of pose `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    #[serde(rename = "type")]
    pub kind: FactorKind,
    pub i: usize,
    pub j: usize,
    /// Square-root information, 3×3 row-major.
    pub sqrt_info: [f64; 9],
}

impl Factor {
    pub fn between(kind: FactorKind, i: usize, j: usize, position_std: f64, angular_std: f64) -> Self {
        Self {
            kind,
            i,
            j,
            sqrt_info: diagonal_sqrt_info(position_std, angular_std),
        }
    }

    pub fn prior(i: usize, position_std: f64, angular_std: f64) -> Self {
        Self::between(FactorKind::Prior, i, i, position_std, angular_std)
    }

    pub fn is_between(&self) -> bool {
        self.kind != FactorKind::Prior
    }
}

pub fn diagonal_sqrt_info(position_std: f64, angular_std: f64) -> [f64; 9] {
    let p = 1.0 / position_std;
    let t = 1.0 / angular_std;
    [p, 0.0, 0.0, 0.0, p, 0.0, 0.0, 0.0, t]
}

type Mat3 = [[f64; 3]; 3];

fn mul(w: &[f64; 9], j: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| w[3 * r + k] * j[k][c]).sum();
        }
    }
    out
}

/// Jacobians of `e = (R_iᵀ(p_j − p_i), θ_j − θ_i)` with respect to pose `i`
/// and pose `j`.
pub fn between_jacobians(pi: &Pose2, pj: &Pose2) -> (Mat3, Mat3) {
    let (s, c) = pi.theta.sin_cos();
    let dx = pj.x - pi.x;
    let dy = pj.y - pi.y;
    let ji = [
        [-c, -s, -s * dx + c * dy],
        [s, -c, -c * dx - s * dy],
        [0.0, 0.0, -1.0],
    ];
    let jj = [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]];
    (ji, jj)
}

/// Whitened rows of one factor. `pose` resolves a pose id to its linearization
/// point and `column` to its first scalar column. Stored entries are
/// structural, so zero Jacobian entries inside a touched block are kept.
pub fn factor_rows(
    f: &Factor,
    pose: impl Fn(usize) -> Option<Pose2>,
    column: impl Fn(usize) -> Option<usize>,
) -> Result<Vec<SparseRow>> {
    let missing = |id| ScenarioError::LayoutMismatch(format!("factor references unknown pose {id}"));
    let ci = column(f.i).ok_or_else(|| missing(f.i))?;
    if f.kind == FactorKind::Prior {
        if f.i != f.j {
            return Err(ScenarioError::LayoutMismatch(format!(
                "prior factor links poses {} and {}",
                f.i, f.j
            )));
        }
        return Ok((0..3)
            .map(|r| (0..3).map(|c| (ci + c, f.sqrt_info[3 * r + c])).collect())
            .collect());
    }
    if f.i == f.j {
        return Err(ScenarioError::LayoutMismatch(format!(
            "between factor links pose {} to itself",
            f.i
        )));
    }
    let cj = column(f.j).ok_or_else(|| missing(f.j))?;
    let pi = pose(f.i).ok_or_else(|| missing(f.i))?;
    let pj = pose(f.j).ok_or_else(|| missing(f.j))?;
    let (ji, jj) = between_jacobians(&pi, &pj);
    let (wi, wj) = (mul(&f.sqrt_info, &ji), mul(&f.sqrt_info, &jj));
    Ok((0..3)
        .map(|r| {
            let mut row: SparseRow = (0..3)
                .map(|c| (ci + c, wi[r][c]))
                .chain((0..3).map(|c| (cj + c, wj[r][c])))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect())
}
