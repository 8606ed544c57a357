//! Gaussian beliefs in square-root information form and the entropy-based
//! planning objective.

use std::collections::HashSet;
use std::f64::consts::{E, PI};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::market::{self, MarketError};
use crate::linalg::{lowrank_update, LinalgError, SparseRowBlock, SparseSymmetric, UpperTriangular};

/// `ln(2πe)`, the per-dimension constant in Gaussian entropies.
pub fn ln_2pi_e() -> f64 {
    (2.0 * PI * E).ln()
}

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("belief file: {0}")]
    Format(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BeliefError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Pose,
    Landmark,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableBlock {
    pub id: usize,
    pub kind: BlockKind,
    pub size: usize,
    pub offset: usize,
}

impl VariableBlock {
    pub fn scalars(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.size
    }
}

/// Shape of a block to be appended; ids are assigned on append.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VariableBlock>", into = "Vec<VariableBlock>")]
pub struct VariableLayout {
    blocks: Vec<VariableBlock>,
    dim: usize,
}

impl VariableLayout {
    /// Builds a layout from `(id, kind, size)` triples, assigning offsets in
    /// order.
    pub fn new(blocks: impl IntoIterator<Item = (usize, BlockKind, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (id, kind, size) in blocks {
            out.push(VariableBlock {
                id,
                kind,
                size,
                offset,
            });
            offset += size;
        }
        Self::from_blocks(out)
    }

    /// `n` generic blocks of size one with ids `0..n`.
    pub fn scalar(n: usize) -> Self {
        Self::new((0..n).map(|i| (i, BlockKind::Generic, 1))).expect("scalar layout is valid")
    }

    pub fn from_blocks(blocks: Vec<VariableBlock>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut offset = 0;
        for b in &blocks {
            if b.size == 0 {
                return Err(BeliefError::InvalidLayout(format!("block {} has size 0", b.id)));
            }
            if b.offset != offset {
                return Err(BeliefError::InvalidLayout(format!(
                    "block {} starts at {} instead of {}",
                    b.id, b.offset, offset
                )));
            }
            if !ids.insert(b.id) {
                return Err(BeliefError::InvalidLayout(format!("duplicate block id {}", b.id)));
            }
            offset += b.size;
        }
        Ok(Self { blocks, dim: offset })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[VariableBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, id: usize) -> Option<&VariableBlock> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Block position owning each scalar.
    pub fn scalar_owner(&self) -> Vec<usize> {
        let mut owner = Vec::with_capacity(self.dim);
        for (k, b) in self.blocks.iter().enumerate() {
            owner.extend(std::iter::repeat_n(k, b.size));
        }
        owner
    }

    /// Smallest id larger than every existing id.
    pub fn next_id(&self) -> usize {
        self.blocks.iter().map(|b| b.id + 1).max().unwrap_or(0)
    }

    pub fn extended(&self, new: &[BlockSpec]) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        let mut offset = self.dim;
        for (id, spec) in (self.next_id()..).zip(new) {
            blocks.push(VariableBlock {
                id,
                kind: spec.kind,
                size: spec.size,
                offset,
            });
            offset += spec.size;
        }
        Self::from_blocks(blocks)
    }
}

impl TryFrom<Vec<VariableBlock>> for VariableLayout {
    type Error = BeliefError;
    fn try_from(blocks: Vec<VariableBlock>) -> Result<Self> {
        Self::from_blocks(blocks)
    }
}

impl From<VariableLayout> for Vec<VariableBlock> {
    fn from(l: VariableLayout) -> Self {
        l.blocks
    }
}

/// Gaussian belief `N(mean, (RᵀR)⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: Vec<f64>,
    root: UpperTriangular,
    layout: VariableLayout,
}

impl GaussianBelief {
    pub fn new(mean: Vec<f64>, root: UpperTriangular, layout: VariableLayout) -> Result<Self> {
        if mean.len() != root.dim() {
            return Err(BeliefError::DimensionMismatch {
                what: "mean",
                expected: root.dim(),
                found: mean.len(),
            });
        }
        if layout.dim() != root.dim() {
            return Err(BeliefError::DimensionMismatch {
                what: "layout",
                expected: root.dim(),
                found: layout.dim(),
            });
        }
        Ok(Self { mean, root, layout })
    }

    /// Factorizes an information matrix in its given ordering.
    pub fn from_information(
        mean: Vec<f64>,
        information: &SparseSymmetric,
        layout: VariableLayout,
    ) -> Result<Self> {
        let root = crate::linalg::cholesky(information)?;
        Self::new(mean, root, layout)
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn root(&self) -> &UpperTriangular {
        &self.root
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn information(&self) -> SparseSymmetric {
        self.root.gram()
    }

    pub fn with_root(&self, root: UpperTriangular) -> Result<Self> {
        Self::new(self.mean.clone(), root, self.layout.clone())
    }

    /// Writes a one-line JSON header (layout and mean) followed by the root
    /// factor in Matrix Market form.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let header = BeliefHeader {
            dim: self.dim(),
            layout: self.layout.clone(),
            mean: self.mean.clone(),
        };
        let line = serde_json::to_string(&header).map_err(|e| BeliefError::Format(e.to_string()))?;
        writeln!(w, "{line}")?;
        market::write_triangular(w, &self.root)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let header: BeliefHeader =
            serde_json::from_str(first.trim()).map_err(|e| BeliefError::Format(e.to_string()))?;
        let root = market::read_triangular(r)?;
        if root.dim() != header.dim {
            return Err(BeliefError::DimensionMismatch {
                what: "root",
                expected: header.dim,
                found: root.dim(),
            });
        }
        Self::new(header.mean, root, header.layout)
    }
}

#[derive(Serialize, Deserialize)]
struct BeliefHeader {
    dim: usize,
    layout: VariableLayout,
    mean: Vec<f64>,
}

/// A candidate action reduced to its whitened collective Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAction {
    pub id: usize,
    pub jacobian: SparseRowBlock,
    pub n_new_vars: usize,
    pub predicted_new_means: Vec<f64>,
    pub new_blocks: Vec<BlockSpec>,
}

impl CandidateAction {
    /// New variables are described as generic scalar blocks.
    pub fn new(
        id: usize,
        jacobian: SparseRowBlock,
        n_new_vars: usize,
        predicted_new_means: Vec<f64>,
    ) -> Result<Self> {
        let new_blocks = vec![
            BlockSpec {
                kind: BlockKind::Generic,
                size: 1
            };
            n_new_vars
        ];
        Self::with_blocks(id, jacobian, predicted_new_means, new_blocks)
    }

    pub fn with_blocks(
        id: usize,
        jacobian: SparseRowBlock,
        predicted_new_means: Vec<f64>,
        new_blocks: Vec<BlockSpec>,
    ) -> Result<Self> {
        let n_new_vars: usize = new_blocks.iter().map(|b| b.size).sum();
        if predicted_new_means.len() != n_new_vars {
            return Err(BeliefError::DimensionMismatch {
                what: "predicted new means",
                expected: n_new_vars,
                found: predicted_new_means.len(),
            });
        }
        if jacobian.n_cols() < n_new_vars {
            return Err(BeliefError::DimensionMismatch {
                what: "jacobian columns",
                expected: n_new_vars,
                found: jacobian.n_cols(),
            });
        }
        Ok(Self {
            id,
            jacobian,
            n_new_vars,
            predicted_new_means,
            new_blocks,
        })
    }

    /// An action with no constraints and no new variables.
    pub fn noop(id: usize, prior_dim: usize) -> Result<Self> {
        Self::new(id, SparseRowBlock::empty(prior_dim)?, 0, Vec::new())
    }

    /// Dimension of the prior this action is built against.
    pub fn prior_dim(&self) -> usize {
        self.jacobian.n_cols() - self.n_new_vars
    }

    fn check(&self, b: &GaussianBelief) -> Result<()> {
        if self.prior_dim() != b.dim() {
            return Err(BeliefError::DimensionMismatch {
                what: "jacobian columns",
                expected: b.dim() + self.n_new_vars,
                found: self.jacobian.n_cols(),
            });
        }
        Ok(())
    }
}

/// Differential entropy `½(N ln 2πe − ln|Λ|)`.
pub fn entropy(b: &GaussianBelief) -> f64 {
    0.5 * (b.dim() as f64 * ln_2pi_e() - b.root.logdet())
}

/// Posterior square-root factor after applying `a`.
pub fn posterior_root(b: &GaussianBelief, a: &CandidateAction) -> Result<UpperTriangular> {
    a.check(b)?;
    Ok(lowrank_update(&b.root, &a.jacobian, a.n_new_vars)?)
}

/// `J = ½(ln|Λ̆ + UᵀU| − N ln 2πe)` with `N` the posterior dimension.
pub fn objective(b: &GaussianBelief, a: &CandidateAction) -> Result<f64> {
    let root = posterior_root(b, a)?;
    Ok(objective_from_logdet(root.logdet(), root.dim()))
}

pub fn objective_from_logdet(logdet: f64, dim: usize) -> f64 {
    0.5 * (logdet - dim as f64 * ln_2pi_e())
}

/// Maximum-likelihood propagation: the factor absorbs `U`, new means are
/// appended and the layout grows by the action's new blocks.
pub fn propagate(b: &GaussianBelief, a: &CandidateAction) -> Result<GaussianBelief> {
    let root = posterior_root(b, a)?;
    let mut mean = b.mean.clone();
    mean.extend_from_slice(&a.predicted_new_means);
    let layout = b.layout.extended(&a.new_blocks)?;
    GaussianBelief::new(mean, root, layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NnzReport {
    pub root_nnz: usize,
    /// Upper-triangle entries of `RᵀR` that survive cancellation.
    pub info_nnz: usize,
}

/// Relative size below which an information entry counts as cancelled.
const CANCELLED: f64 = 1e-10;

/// Stored root entries and numerically nonzero information entries. Products
/// of fill-in often cancel in `RᵀR`; an entry `Λ_ij` is kept when
/// `|Λ_ij| > 1e-10·√(Λ_ii Λ_jj)`.
pub fn nnz_report(b: &GaussianBelief) -> NnzReport {
    let lam = b.root.gram();
    let d = lam.diagonal();
    let info_nnz = lam
        .entries()
        .iter()
        .filter(|&&(i, j, v)| i == j || v.abs() > CANCELLED * (d[i] * d[j]).sqrt())
        .count();
    NnzReport {
        root_nnz: b.root.nnz(),
        info_nnz,
    }
}
