use super::{LinalgError, Result};

/// A permutation of `0..dim`.
///
/// `forward[i]` is the original index that lands at position `i`, so a
/// permuted matrix satisfies `out(i, j) = m(forward[i], forward[j])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &f) in forward.iter().enumerate() {
            if f >= n {
                return Err(LinalgError::InvalidPermutation(format!(
                    "index {f} out of range for dimension {n}"
                )));
            }
            if inverse[f] != usize::MAX {
                return Err(LinalgError::InvalidPermutation(format!(
                    "index {f} appears twice"
                )));
            }
            inverse[f] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn identity(dim: usize) -> Self {
        let forward: Vec<usize> = (0..dim).collect();
        Self {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Stable ordering that puts `first` (in ascending original order) ahead
    /// of every other index, which keeps its original relative order too.
    pub fn selected_first(dim: usize, first: &[usize]) -> Result<Self> {
        let mut selected = vec![false; dim];
        for &i in first {
            if i >= dim {
                return Err(LinalgError::InvalidPermutation(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            selected[i] = true;
        }
        let forward = (0..dim)
            .filter(|&i| selected[i])
            .chain((0..dim).filter(|&i| !selected[i]))
            .collect();
        Self::new(forward)
    }

    pub fn dim(&self) -> usize {
        self.forward.len()
    }

    pub fn forward_map(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverse(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i == f)
    }

    /// `out[i] = v[forward[i]]`.
    pub fn apply<T: Clone>(&self, v: &[T]) -> Vec<T> {
        self.forward.iter().map(|&f| v[f].clone()).collect()
    }
}
