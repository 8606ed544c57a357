#![allow(dead_code)]

use std::collections::BTreeSet;

use bsparse::belief::{BlockKind, CandidateAction, GaussianBelief, VariableLayout};
use bsparse::linalg::{SparseRow, SparseRowBlock, SparseSymmetric, UpperTriangular};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Blocks of size 1 to 3, ids in order.
pub fn random_layout(rng: &mut ChaCha8Rng, n_blocks: usize) -> VariableLayout {
    VariableLayout::new((0..n_blocks).map(|id| (id, BlockKind::Generic, rng.gen_range(1..=3)))).unwrap()
}

/// Upper-triangular factor with diagonal in [0.5, 2] and off-diagonal fill of
/// roughly `density`.
pub fn random_root(rng: &mut ChaCha8Rng, n: usize, density: f64) -> UpperTriangular {
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let off: Vec<SparseRow> = (0..n)
        .map(|i| {
            let mut row = SparseRow::new();
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    row.push((j, rng.gen_range(-1.0..1.0)));
                }
            }
            row
        })
        .collect();
    UpperTriangular::new(diag, off).unwrap()
}

pub fn random_belief(rng: &mut ChaCha8Rng, n_blocks: usize, density: f64) -> GaussianBelief {
    let layout = random_layout(rng, n_blocks);
    let n = layout.dim();
    let root = random_root(rng, n, density);
    GaussianBelief::new(vec![0.0; n], root, layout).unwrap()
}

/// Random candidate whose prior columns lie in `blocks`. Each new variable
/// gets a row with a unit-scale pivot on it, so augmentation stays well posed.
pub fn random_candidate(
    rng: &mut ChaCha8Rng,
    id: usize,
    layout: &VariableLayout,
    blocks: &[usize],
    n_new: usize,
) -> CandidateAction {
    let n = layout.dim();
    let cols: Vec<usize> = blocks
        .iter()
        .flat_map(|&b| layout.block(b).unwrap().scalars())
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let extra = rng.gen_range(1..=3);
    for r in 0..n_new + extra {
        let mut row = vec![0.0; n + n_new];
        for _ in 0..rng.gen_range(1..=3) {
            if let Some(&c) = cols.choose(rng) {
                row[c] = rng.gen_range(-2.0..2.0);
            }
        }
        if r < n_new {
            for (k, v) in row[n..].iter_mut().enumerate() {
                if k < r && rng.gen_bool(0.5) {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
            row[n + r] = rng.gen_range(0.5..2.0);
        } else if n_new > 0 {
            row[n + rng.gen_range(0..n_new)] = rng.gen_range(-1.0..1.0);
        }
        rows.push(row);
    }
    let u = SparseRowBlock::from_dense_rows(n + n_new, &rows).unwrap();
    CandidateAction::new(id, u, n_new, vec![0.0; n_new]).unwrap()
}

/// Random non-empty subset of `0..n`.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<usize> {
    let mut s: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
    if s.is_empty() {
        s.insert(rng.gen_range(0..n));
    }
    s
}

pub fn dense_logdet(m: &DMatrix<f64>) -> f64 {
    let c = m.clone().cholesky().expect("positive definite");
    2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// `Λ̆ + UᵀU`, densely.
pub fn dense_posterior(lam: &SparseSymmetric, u: &SparseRowBlock) -> DMatrix<f64> {
    let n = u.n_cols();
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (lam.dim(), lam.dim())).copy_from(&lam.to_dense());
    let ud = u.to_dense();
    m + ud.transpose() * ud
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// Counts spanning trees by testing every (n−1)-edge subset for acyclicity.
pub fn brute_force_trees(n: usize, edges: &[(usize, usize)]) -> u64 {
    if n == 1 {
        return 1;
    }
    let m = edges.len();
    let mut count = 0;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        let mut acyclic = true;
        for (k, &(a, b)) in edges.iter().enumerate() {
            if mask & (1 << k) != 0 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra == rb {
                    acyclic = false;
                    break;
                }
                parent[ra] = rb;
            }
        }
        count += u64::from(acyclic);
    }
    count
}
