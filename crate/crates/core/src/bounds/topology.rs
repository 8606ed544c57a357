use serde::{Deserialize, Serialize};

use super::{BoundsError, Result};
use crate::linalg::{cholesky, SymmetricAccumulator};

/// Undirected multigraph over pose nodes. Node 0 is the reference node removed
/// from the Laplacian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseGraph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl PoseGraph {
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(BoundsError::InvalidGraph("graph has no nodes".into()));
        }
        for &(i, j) in &edges {
            if i == j {
                return Err(BoundsError::InvalidGraph(format!("self-loop on node {i}")));
            }
            if i >= n_nodes || j >= n_nodes {
                return Err(BoundsError::InvalidGraph(format!(
                    "edge ({i}, {j}) outside {n_nodes} nodes"
                )));
            }
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_nodes];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n_nodes
    }

    fn reduced_laplacian_logdet(&self) -> Result<f64> {
        let n = self.n_nodes - 1;
        let mut acc = SymmetricAccumulator::new(n);
        for &(i, j) in &self.edges {
            if i > 0 {
                acc.add(i - 1, i - 1, 1.0);
            }
            if j > 0 {
                acc.add(j - 1, j - 1, 1.0);
            }
            if i > 0 && j > 0 {
                acc.add(i - 1, j - 1, -1.0);
            }
        }
        Ok(cholesky(&acc.finish()?)?.logdet())
    }
}

/// Noise constants of the topological bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologicalNoiseConfig {
    pub mu: f64,
    pub psi: f64,
    /// Angular variance over position variance.
    pub ratio: f64,
}

impl Default for TopologicalNoiseConfig {
    fn default() -> Self {
        Self {
            mu: 0.0,
            psi: 1.0,
            ratio: 1.0,
        }
    }
}

impl TopologicalNoiseConfig {
    pub fn new(mu: f64, psi: f64, ratio: f64) -> Result<Self> {
        if !(mu.is_finite() && psi.is_finite() && psi >= 0.0) {
            return Err(BoundsError::InvalidConfig(format!("mu {mu}, psi {psi}")));
        }
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(BoundsError::InvalidConfig(format!("ratio {ratio}")));
        }
        Ok(Self { mu, psi, ratio })
    }
}

/// Constants for planar pose graphs whose factors (anchor, odometry and loop
/// closures alike) share the noise `diag(σp², σp², σθ²)`.
///
/// Ordering positions before headings, the position block of the information
/// matrix is `τp·(L̃ ⊗ I₂)` and the heading Schur complement lies between
/// `τθ·L̃` and `τθ·L̃ + τp·B`, where `B` is diagonal with
/// `B_ii = Σ‖p_j − p_i‖²` over factors leaving pose `i`. Hence
/// `μ = n·(2 ln τp + ln τθ)` and `Ψ = (σθ²/σp²)·max B_ii`.
pub fn se2_noise_config(
    n_poses: usize,
    position_std: f64,
    angular_std: f64,
    max_lever_sq: f64,
) -> Result<TopologicalNoiseConfig> {
    if !(position_std > 0.0 && angular_std > 0.0) {
        return Err(BoundsError::InvalidConfig(
            "standard deviations must be positive".into(),
        ));
    }
    let var_p = position_std * position_std;
    let var_t = angular_std * angular_std;
    let mu = n_poses as f64 * (-2.0 * var_p.ln() - var_t.ln());
    let ratio = var_t / var_p;
    TopologicalNoiseConfig::new(mu, ratio * max_lever_sq.max(0.0), ratio)
}

/// `ln t(g)`: log of the number of spanning trees, by the matrix-tree theorem.
pub fn spanning_tree_count(g: &PoseGraph) -> Result<f64> {
    if !g.is_connected() {
        return Err(BoundsError::DisconnectedGraph);
    }
    if g.n_nodes == 1 {
        return Ok(0.0);
    }
    g.reduced_laplacian_logdet()
}

/// Lower and upper bounds on the log-determinant of the information matrix:
/// `lb = 3·ln t + μ`, `ub = lb + Σ ln(d_i + Ψ) − ln|L̃|` over the non-reference
/// nodes.
pub fn topological_bounds(g: &PoseGraph, cfg: &TopologicalNoiseConfig) -> Result<(f64, f64)> {
    let lt = spanning_tree_count(g)?;
    let lb = 3.0 * lt + cfg.mu;
    let degrees = g.degrees();
    let hadamard: f64 = degrees[1..]
        .iter()
        .map(|&d| (d as f64 + cfg.psi).ln())
        .sum();
    let width = hadamard - lt;
    assert!(
        width >= -1e-9 * hadamard.abs().max(1.0),
        "diagonal product below the reduced Laplacian determinant"
    );
    Ok((lb, lb + width.max(0.0)))
}
