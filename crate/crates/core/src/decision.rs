//! Decision problems over candidate actions and the metrics used to compare an
//! original problem with a simplified one.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{objective, BeliefError, CandidateAction, GaussianBelief};

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("decision problem has no candidates")]
    NoCandidates,
    #[error("duplicate candidate id {0}")]
    DuplicateCandidate(usize),
    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("objective for candidate {candidate} failed: {source}")]
    Objective {
        candidate: usize,
        #[source]
        source: BeliefError,
    },
}

pub type Result<T> = std::result::Result<T, DecisionError>;

#[derive(Debug, Clone)]
pub struct DecisionProblem {
    belief: GaussianBelief,
    candidates: Vec<CandidateAction>,
}

impl DecisionProblem {
    pub fn new(belief: GaussianBelief, candidates: Vec<CandidateAction>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(DecisionError::NoCandidates);
        }
        let mut seen = HashSet::new();
        for c in &candidates {
            if !seen.insert(c.id) {
                return Err(DecisionError::DuplicateCandidate(c.id));
            }
        }
        Ok(Self { belief, candidates })
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn candidates(&self) -> &[CandidateAction] {
        &self.candidates
    }

    /// Same candidates against another belief (e.g. a sparsified prior).
    pub fn with_belief(&self, belief: GaussianBelief) -> Self {
        Self {
            belief,
            candidates: self.candidates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub best_index: usize,
    pub values: Vec<f64>,
}

impl Solution {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let best_index = argmax(&values).ok_or(DecisionError::NoCandidates)?;
        Ok(Self { best_index, values })
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Evaluates every candidate on the current rayon pool.
pub fn solve(p: &DecisionProblem) -> Result<Solution> {
    let values = p
        .candidates
        .par_iter()
        .map(|a| evaluate(&p.belief, a))
        .collect::<Result<Vec<f64>>>()?;
    Solution::from_values(values)
}

pub fn solve_sequential(p: &DecisionProblem) -> Result<Solution> {
    let values = p
        .candidates
        .iter()
        .map(|a| evaluate(&p.belief, a))
        .collect::<Result<Vec<f64>>>()?;
    Solution::from_values(values)
}

fn evaluate(b: &GaussianBelief, a: &CandidateAction) -> Result<f64> {
    objective(b, a).map_err(|source| DecisionError::Objective {
        candidate: a.id,
        source,
    })
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(DecisionError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(DecisionError::NoCandidates);
    }
    Ok(())
}

/// `max(original) − original[simplified_best]`.
pub fn simplification_loss(original_values: &[f64], simplified_best: usize) -> Result<f64> {
    let best = argmax(original_values).ok_or(DecisionError::NoCandidates)?;
    let chosen = original_values
        .get(simplified_best)
        .ok_or(DecisionError::IndexOutOfRange {
            index: simplified_best,
            len: original_values.len(),
        })?;
    Ok(original_values[best] - chosen)
}

/// Both vectors induce the same strict order on every pair.
pub fn action_consistent(v1: &[f64], v2: &[f64]) -> Result<bool> {
    action_consistent_with_tolerance(v1, v2, 0.0)
}

/// Pairs closer than `tol` count as ties.
pub fn action_consistent_with_tolerance(v1: &[f64], v2: &[f64], tol: f64) -> Result<bool> {
    check_lengths(v1, v2)?;
    let cmp = |v: &[f64], i: usize, j: usize| -> i8 {
        let d = v[j] - v[i];
        if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        }
    };
    for i in 0..v1.len() {
        for j in i + 1..v1.len() {
            if cmp(v1, i, j) != cmp(v2, i, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `max |orig − balance(simp)|`; identity balance when `None`.
pub fn offset(
    values_orig: &[f64],
    values_simp: &[f64],
    balance: Option<&dyn Fn(f64) -> f64>,
) -> Result<f64> {
    check_lengths(values_orig, values_simp)?;
    Ok(values_orig
        .iter()
        .zip(values_simp)
        .map(|(&o, &s)| (o - balance.map_or(s, |f| f(s))).abs())
        .fold(0.0, f64::max))
}

/// Best offset over constant shifts, `(max d − min d)/2` with `d = orig − simp`.
/// An upper bound on the offset minimized over all monotone balances.
pub fn balanced_offset_upper(values_orig: &[f64], values_simp: &[f64]) -> Result<f64> {
    check_lengths(values_orig, values_simp)?;
    let (lo, hi) = values_orig
        .iter()
        .zip(values_simp)
        .map(|(o, s)| o - s)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    Ok((hi - lo) / 2.0)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let r = (start + end - 1) as f64 / 2.0 + 1.0;
        for &k in &idx[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
///
/// A constant vector has no rank variance: the result is 1 when both vectors
/// are constant and 0 when only one is.
pub fn rank_correlation(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(DecisionError::LengthMismatch {
            left: v1.len(),
            right: v2.len(),
        });
    }
    if v1.len() < 2 {
        return Err(DecisionError::DegenerateInput(
            "rank correlation needs at least two values",
        ));
    }
    let r1 = average_ranks(v1);
    let r2 = average_ranks(v2);
    let n = r1.len() as f64;
    let m1 = r1.iter().sum::<f64>() / n;
    let m2 = r2.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in r1.iter().zip(&r2) {
        sxy += (a - m1) * (b - m2);
        sxx += (a - m1) * (a - m1);
        syy += (b - m2) * (b - m2);
    }
    match (sxx == 0.0, syy == 0.0) {
        (true, true) => Ok(1.0),
        (true, false) | (false, true) => Ok(0.0),
        _ => Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)),
    }
}
