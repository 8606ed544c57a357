//! Scalable belief sparsification and detection of variables that no
//! candidate action touches.
//!
//! Sparsifying a set `S` removes the off-diagonal entries of the `S` rows of
//! the square-root factor taken in an `S`-first ordering. The determinant of
//! the information matrix is unchanged, and the factor can be permuted back to
//! the original ordering without losing its triangular shape.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{CandidateAction, GaussianBelief, VariableLayout};
use crate::linalg::{
    cholesky, permute_symmetric, permute_triangular_back, LinalgError, Permutation, UpperTriangular,
};

#[derive(Debug, Error)]
pub enum SparsifyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid sparsification spec: {0}")]
    InvalidSpec(String),
    #[error("candidate {candidate} has {found} columns, layout expects {expected}")]
    LayoutMismatch {
        candidate: usize,
        expected: usize,
        found: usize,
    },
}

pub type Result<T> = std::result::Result<T, SparsifyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsificationMode {
    None,
    Uninvolved,
    Full,
    Custom,
}

impl SparsificationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Uninvolved => "uninvolved",
            Self::Full => "full",
            Self::Custom => "custom",
        }
    }
}

impl std::fmt::Display for SparsificationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SparsificationMode {
    type Err = SparsifyError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "uninvolved" => Ok(Self::Uninvolved),
            "full" => Ok(Self::Full),
            "custom" => Ok(Self::Custom),
            other => Err(SparsifyError::InvalidSpec(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsificationSpec {
    pub mode: SparsificationMode,
    /// Block ids, used by `Custom` only.
    #[serde(default)]
    pub custom_blocks: BTreeSet<usize>,
}

impl SparsificationSpec {
    pub fn none() -> Self {
        Self::mode(SparsificationMode::None)
    }

    pub fn uninvolved() -> Self {
        Self::mode(SparsificationMode::Uninvolved)
    }

    pub fn full() -> Self {
        Self::mode(SparsificationMode::Full)
    }

    pub fn custom(blocks: impl IntoIterator<Item = usize>) -> Self {
        Self {
            mode: SparsificationMode::Custom,
            custom_blocks: blocks.into_iter().collect(),
        }
    }

    fn mode(mode: SparsificationMode) -> Self {
        Self {
            mode,
            custom_blocks: BTreeSet::new(),
        }
    }

    /// Block ids forming `S`. Custom mode adds the never-involved blocks
    /// when a mask is available.
    pub fn resolve(
        &self,
        layout: &VariableLayout,
        mask: Option<&InvolvementMask>,
    ) -> Result<BTreeSet<usize>> {
        match self.mode {
            SparsificationMode::None => Ok(BTreeSet::new()),
            SparsificationMode::Full => Ok(layout.blocks().iter().map(|b| b.id).collect()),
            SparsificationMode::Uninvolved => {
                let mask = mask.ok_or_else(|| {
                    SparsifyError::InvalidSpec("uninvolved mode requires an involvement mask".into())
                })?;
                Ok(mask.uninvolved(layout).into_iter().collect())
            }
            SparsificationMode::Custom => {
                for id in &self.custom_blocks {
                    if layout.block(*id).is_none() {
                        return Err(SparsifyError::InvalidSpec(format!("unknown block id {id}")));
                    }
                }
                let mut s = self.custom_blocks.clone();
                if let Some(mask) = mask {
                    s.extend(mask.uninvolved(layout));
                }
                Ok(s)
            }
        }
    }
}

/// Which prior blocks each candidate touches.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InvolvementMask {
    pub involved_blocks: BTreeSet<usize>,
    pub per_candidate: Vec<BTreeSet<usize>>,
}

impl InvolvementMask {
    /// Prior block ids touched by no candidate, in layout order.
    pub fn uninvolved(&self, layout: &VariableLayout) -> Vec<usize> {
        layout
            .blocks()
            .iter()
            .map(|b| b.id)
            .filter(|id| !self.involved_blocks.contains(id))
            .collect()
    }

    pub fn is_involved(&self, block_id: usize) -> bool {
        self.involved_blocks.contains(&block_id)
    }
}

/// A prior block is involved when any candidate Jacobian stores an entry in
/// one of its columns. Columns of newly introduced variables are skipped.
pub fn detect_involvement(
    layout: &VariableLayout,
    candidates: &[CandidateAction],
) -> Result<InvolvementMask> {
    let n = layout.dim();
    let owner = layout.scalar_owner();
    let mut mask = InvolvementMask::default();
    for (k, a) in candidates.iter().enumerate() {
        if a.prior_dim() != n {
            return Err(SparsifyError::LayoutMismatch {
                candidate: k,
                expected: n + a.n_new_vars,
                found: a.jacobian.n_cols(),
            });
        }
        let blocks: BTreeSet<usize> = a
            .jacobian
            .support()
            .into_iter()
            .take_while(|&c| c < n)
            .map(|c| layout.blocks()[owner[c]].id)
            .collect();
        mask.involved_blocks.extend(blocks.iter().copied());
        mask.per_candidate.push(blocks);
    }
    Ok(mask)
}

/// Scalar indices of the given block ids, ascending.
pub fn block_scalars(layout: &VariableLayout, blocks: &BTreeSet<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = layout
        .blocks()
        .iter()
        .filter(|b| blocks.contains(&b.id))
        .flat_map(|b| b.scalars())
        .collect();
    out.sort_unstable();
    out
}

/// Sparsifies `b` per `spec`, keeping mean and layout.
pub fn sparsify_belief(
    b: &GaussianBelief,
    spec: &SparsificationSpec,
    mask: Option<&InvolvementMask>,
) -> Result<GaussianBelief> {
    let blocks = spec.resolve(b.layout(), mask)?;
    if blocks.is_empty() {
        return Ok(b.clone());
    }
    if blocks.len() == b.layout().len() {
        return Ok(fast_full_sparsify(b));
    }
    let scalars = block_scalars(b.layout(), &blocks);
    let root = sparsify_root(b.root(), &scalars)?;
    Ok(b.with_root(root).expect("dimensions unchanged"))
}

/// Sparsifies the scalar rows `s` (ascending, distinct) of a factor.
///
/// When `s` already forms a leading prefix, the factor is used as is;
/// otherwise the information matrix is rebuilt, reordered `S`-first and
/// refactorized. The zeroed factor is then permuted back.
pub fn sparsify_root(r: &UpperTriangular, s: &[usize]) -> Result<UpperTriangular> {
    let n = r.dim();
    if s.is_empty() {
        return Ok(r.clone());
    }
    if s.iter().any(|&i| i >= n) || s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SparsifyError::InvalidSpec(
            "scalar set must be ascending, distinct and in range".into(),
        ));
    }
    let k = s.len();
    let is_prefix = s.iter().enumerate().all(|(i, &v)| i == v);
    if is_prefix {
        return Ok(zero_leading_rows(r.clone(), k));
    }
    let p = Permutation::selected_first(n, s)?;
    let lam = permute_symmetric(&r.gram(), &p)?;
    let rp = zero_leading_rows(cholesky(&lam)?, k);
    let leading: Vec<usize> = (0..k).collect();
    Ok(permute_triangular_back(&rp, &p.inverse(), &leading)?)
}

fn zero_leading_rows(r: UpperTriangular, k: usize) -> UpperTriangular {
    let (diag, mut off) = r.into_parts();
    for row in off.iter_mut().take(k) {
        row.clear();
    }
    UpperTriangular::from_parts_unchecked(diag, off)
}

/// Full sparsification straight from the factor: keep only its diagonal.
pub fn fast_full_sparsify(b: &GaussianBelief) -> GaussianBelief {
    let root = UpperTriangular::from_diagonal(b.root().diagonal().to_vec())
        .expect("factor diagonal is positive");
    b.with_root(root).expect("dimensions unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{entropy, BlockKind};
    use crate::linalg::{SparseRowBlock, SparseSymmetric};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn belief(m: &DMatrix<f64>) -> GaussianBelief {
        let n = m.nrows();
        GaussianBelief::from_information(
            vec![0.0; n],
            &SparseSymmetric::from_dense(m).unwrap(),
            VariableLayout::scalar(n),
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_prefix() {
        let b = belief(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let s = sparsify_belief(&b, &SparsificationSpec::custom([0]), None).unwrap();
        let lam = s.information().to_dense();
        assert_relative_eq!(lam, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.5]), epsilon = 1e-12);
        assert_relative_eq!(s.root().logdet(), 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn none_is_identity() {
        let b = belief(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert_eq!(sparsify_belief(&b, &SparsificationSpec::none(), None).unwrap(), b);
    }

    #[test]
    fn fast_full_examples() {
        let diag = GaussianBelief::new(
            vec![0.0; 2],
            UpperTriangular::from_diagonal(vec![2.0, 3.0]).unwrap(),
            VariableLayout::scalar(2),
        )
        .unwrap();
        assert_eq!(fast_full_sparsify(&diag), diag);

        let r = UpperTriangular::new(vec![1.0, 1.0], vec![vec![(1, 0.5)], vec![]]).unwrap();
        let b = GaussianBelief::new(vec![0.0; 2], r, VariableLayout::scalar(2)).unwrap();
        let s = fast_full_sparsify(&b);
        assert_eq!(s.root(), &UpperTriangular::identity(2).unwrap());
        assert_eq!(s.root().logdet(), 0.0);
        assert_eq!(
            sparsify_belief(&b, &SparsificationSpec::full(), None).unwrap(),
            s
        );
    }

    #[test]
    fn non_prefix_set_preserves_logdet() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, 0.0, 0.5, //
                1.0, 3.0, 1.0, 0.0, //
                0.0, 1.0, 5.0, 1.0, //
                0.5, 0.0, 1.0, 2.0,
            ],
        );
        let b = belief(&a);
        let s = sparsify_belief(&b, &SparsificationSpec::custom([1, 3]), None).unwrap();
        assert_relative_eq!(entropy(&s), entropy(&b), epsilon = 1e-12);
        // S rows in S-first order must be diagonal
        let p = Permutation::selected_first(4, &[1, 3]).unwrap();
        let rp = cholesky(&permute_symmetric(&s.information(), &p).unwrap()).unwrap();
        for i in 0..2 {
            for &(_, v) in rp.off_row(i) {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_granularity() {
        let layout =
            VariableLayout::new([(7, BlockKind::Pose, 3), (8, BlockKind::Landmark, 2)]).unwrap();
        let set: BTreeSet<usize> = [8].into_iter().collect();
        assert_eq!(block_scalars(&layout, &set), vec![3, 4]);
        assert!(SparsificationSpec::custom([99]).resolve(&layout, None).is_err());
        assert!(SparsificationSpec::uninvolved().resolve(&layout, None).is_err());
    }

    #[test]
    fn involvement_from_zero_columns() {
        let layout = VariableLayout::scalar(5);
        let u = SparseRowBlock::from_dense_rows(
            5,
            &[vec![0.0, 0.0, 0.0, 1.2, 0.3], vec![0.0, 0.0, 0.0, 0.0, 2.0]],
        )
        .unwrap();
        let a = CandidateAction::new(0, u, 0, vec![]).unwrap();
        let mask = detect_involvement(&layout, &[a]).unwrap();
        assert_eq!(mask.uninvolved(&layout), vec![0, 1, 2]);

        let zero = CandidateAction::new(1, SparseRowBlock::empty(5).unwrap(), 0, vec![]).unwrap();
        let mask = detect_involvement(&layout, &[zero]).unwrap();
        assert_eq!(mask.uninvolved(&layout), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn involvement_ignores_new_columns_and_checks_width() {
        let layout = VariableLayout::scalar(2);
        let u = SparseRowBlock::new(3, vec![vec![(1, 1.0), (2, 1.0)]]).unwrap();
        let a = CandidateAction::new(0, u, 1, vec![0.0]).unwrap();
        let mask = detect_involvement(&layout, &[a]).unwrap();
        assert_eq!(mask.involved_blocks, [1].into_iter().collect());
        let wrong = CandidateAction::noop(0, 3).unwrap();
        assert!(matches!(
            detect_involvement(&layout, &[wrong]),
            Err(SparsifyError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("full".parse::<SparsificationMode>().unwrap(), SparsificationMode::Full);
        assert!("partial".parse::<SparsificationMode>().is_err());
    }
}
