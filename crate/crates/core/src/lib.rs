//! Belief-space planning over Gaussian beliefs with belief sparsification.
//!
//! The crate is layered bottom-up:
//!
//! * [`linalg`]: sparse symmetric and triangular kernels.
//! * [`belief`]: Gaussian beliefs in square-root form and the entropy
//!   objective.
//! * [`sparsify`]: belief sparsification and involvement detection.
//! * [`decision`]: decision problems and simplification metrics.
//! * [`bounds`]: objective and loss guarantees.
//! * [`scenario`]: synthetic pose-SLAM sessions and reports.

pub mod belief;
pub mod bounds;
pub mod decision;
pub mod linalg;
pub mod scenario;
pub mod sparsify;
