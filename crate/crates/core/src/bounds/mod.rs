//! Guarantees on the planning objective and on the loss caused by planning
//! with a simplified belief.
//!
//! * [`topological_bounds`]: pose-graph bounds from the number of spanning
//!   trees.
//! * [`determinant_bounds`]: Minkowski and Hadamard bounds on the posterior
//!   log-determinant.
//! * [`rank1_offset_bound`]: offset bound for single-row candidate actions.
//! * [`post_solution_loss_bound`]: turns per-candidate bounds into a bound on
//!   the simplification loss.

mod determinant;
mod loss;
mod rank1;
mod topology;

pub use determinant::{determinant_bounds, ObjectiveBounds};
pub use loss::{post_solution_loss_bound, Monotonicity};
pub use rank1::{rank1_alpha, rank1_offset_bound};
pub use topology::{
    se2_noise_config, spanning_tree_count, topological_bounds, PoseGraph, TopologicalNoiseConfig,
};

use thiserror::Error;

use crate::belief::BeliefError;
use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("pose graph is disconnected")]
    DisconnectedGraph,
    #[error("invalid pose graph: {0}")]
    InvalidGraph(String),
    #[error("candidate {candidate} has {rows} rows, expected exactly one")]
    NotRankOne { candidate: usize, rows: usize },
    #[error("candidate {candidate} introduces new variables")]
    AugmentingCandidate { candidate: usize },
    #[error("alpha {alpha} is below the largest squared Jacobian entry {required}")]
    AlphaTooSmall { alpha: f64, required: f64 },
    #[error("computed loss bound {0} is negative")]
    InconsistentBounds(f64),
    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, BoundsError>;
