//! Synthetic planar pose-SLAM sessions: a random-walk prior with odometry and
//! loop closures, and candidate trajectories that branch from the last pose.

mod factors;
mod generate;
mod report;
mod session;

pub use factors::{between_jacobians, diagonal_sqrt_info, factor_rows, Factor, FactorKind, Pose2};
pub use generate::generate;
pub use report::{
    bench_summary, write_bench_csv, write_session_csv, BenchModeSummary, BenchSummary,
    CSV_SCHEMA_VERSION,
};
pub use session::{run_session, ModeReport, SessionOptions, SessionReport, Timing};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BlockKind, BlockSpec, CandidateAction, GaussianBelief, VariableLayout};
use crate::bounds::{BoundsError, PoseGraph};
use crate::decision::DecisionError;
use crate::linalg::{cholesky, LinalgError, SparseRowBlock, SymmetricAccumulator};
use crate::sparsify::SparsifyError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Sparsify(#[from] SparsifyError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Meters.
    pub position_std: f64,
    /// Radians.
    pub angular_std: f64,
}

impl NoiseModel {
    /// Angular variance over position variance.
    pub fn ratio(&self) -> f64 {
        (self.angular_std / self.position_std).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_prior_poses: usize,
    /// Side of the square world, meters.
    pub world_extent: f64,
    pub odometry_noise: NoiseModel,
    /// Meters.
    pub loop_closure_radius: f64,
    pub n_candidates: usize,
    /// New poses per candidate trajectory.
    pub candidate_length: usize,
    /// Meters per prior step.
    #[serde(default = "default_step")]
    pub step_length: f64,
    /// Heading change per prior step, radians (standard deviation).
    #[serde(default = "default_turn")]
    pub turn_std: f64,
}

fn default_step() -> f64 {
    1.0
}

fn default_turn() -> f64 {
    0.35
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_prior_poses: 100,
            world_extent: 20.0,
            odometry_noise: NoiseModel {
                position_std: 0.1,
                angular_std: 0.05,
            },
            loop_closure_radius: 2.0,
            n_candidates: 8,
            candidate_length: 15,
            step_length: default_step(),
            turn_std: default_turn(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ScenarioError::InvalidConfig(m.to_string()));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.n_prior_poses == 0 {
            return bad("n_prior_poses must be positive");
        }
        if self.n_candidates == 0 {
            return bad("n_candidates must be positive");
        }
        if self.candidate_length == 0 {
            return bad("candidate_length must be positive");
        }
        if !positive(self.odometry_noise.position_std) || !positive(self.odometry_noise.angular_std) {
            return bad("noise standard deviations must be positive");
        }
        if !positive(self.loop_closure_radius) {
            return bad("loop_closure_radius must be positive");
        }
        if !positive(self.world_extent) || !positive(self.step_length) {
            return bad("world_extent and step_length must be positive");
        }
        if !(self.turn_std.is_finite() && self.turn_std >= 0.0) {
            return bad("turn_std must be non-negative");
        }
        Ok(())
    }
}

/// One candidate trajectory: new poses (ids continue after the prior poses)
/// and the factors it predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePlan {
    pub id: usize,
    pub new_poses: Vec<Pose2>,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    poses: Vec<Pose2>,
    factors: Vec<Factor>,
    plans: Vec<CandidatePlan>,
    prior: GaussianBelief,
    actions: Vec<CandidateAction>,
}

impl Scenario {
    /// Builds the prior factor and every candidate's collective Jacobian.
    pub fn assemble(
        config: ScenarioConfig,
        poses: Vec<Pose2>,
        factors: Vec<Factor>,
        plans: Vec<CandidatePlan>,
    ) -> Result<Self> {
        let n = poses.len();
        if n == 0 {
            return Err(ScenarioError::InvalidConfig("scenario has no poses".into()));
        }
        let layout = VariableLayout::new((0..n).map(|i| (i, BlockKind::Pose, 3)))?;
        let dim = 3 * n;
        let mut acc = SymmetricAccumulator::new(dim);
        for f in &factors {
            if f.i >= n || f.j >= n {
                return Err(ScenarioError::LayoutMismatch(format!(
                    "prior factor ({}, {}) outside {n} poses",
                    f.i, f.j
                )));
            }
            for row in factor_rows(f, |id| poses.get(id).copied(), |id| Some(3 * id))? {
                acc.add_outer(&row);
            }
        }
        let root = cholesky(&acc.finish()?)?;
        let mean = poses.iter().flat_map(|p| [p.x, p.y, p.theta]).collect();
        let prior = GaussianBelief::new(mean, root, layout)?;

        let actions = plans
            .iter()
            .map(|plan| build_collective_jacobian(plan, &poses))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            poses,
            factors,
            plans,
            prior,
            actions,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn poses(&self) -> &[Pose2] {
        &self.poses
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn plans(&self) -> &[CandidatePlan] {
        &self.plans
    }

    pub fn prior(&self) -> &GaussianBelief {
        &self.prior
    }

    pub fn candidates(&self) -> &[CandidateAction] {
        &self.actions
    }

    pub fn n_prior_poses(&self) -> usize {
        self.poses.len()
    }

    /// Prior poses some candidate links to.
    pub fn involved_poses(&self) -> BTreeSet<usize> {
        let n = self.poses.len();
        self.plans
            .iter()
            .flat_map(|p| p.factors.iter())
            .flat_map(|f| [f.i, f.j])
            .filter(|&id| id < n)
            .collect()
    }

    fn pose_lookup<'a>(&'a self, plan: &'a CandidatePlan) -> impl Fn(usize) -> Option<Pose2> + 'a {
        let n = self.poses.len();
        move |id| {
            if id < n {
                self.poses.get(id).copied()
            } else {
                plan.new_poses.get(id - n).copied()
            }
        }
    }

    /// Posterior pose graph of candidate `k`. Node 0 is the reference that
    /// absolute priors attach to; pose `p` is node `p + 1`.
    pub fn pose_graph(&self, k: usize) -> Result<PoseGraph> {
        let plan = &self.plans[k];
        let n_nodes = 1 + self.poses.len() + plan.new_poses.len();
        let edges = self
            .factors
            .iter()
            .chain(&plan.factors)
            .map(|f| match f.kind {
                FactorKind::Prior => (0, f.i + 1),
                _ => (f.i + 1, f.j + 1),
            })
            .collect();
        Ok(PoseGraph::new(n_nodes, edges)?)
    }

    /// Largest `Σ‖p_j − p_i‖²` over between-factors sharing a first pose `i`,
    /// in the posterior of candidate `k`.
    pub fn max_lever_sq(&self, k: usize) -> f64 {
        let plan = &self.plans[k];
        let pose = self.pose_lookup(plan);
        let mut lever = vec![0.0; self.poses.len() + plan.new_poses.len()];
        for f in self.factors.iter().chain(&plan.factors) {
            if f.is_between() {
                if let (Some(a), Some(b)) = (pose(f.i), pose(f.j)) {
                    lever[f.i] += a.distance_sq(&b);
                }
            }
        }
        lever.into_iter().fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> ScenarioFile {
        let n = self.poses.len();
        ScenarioFile {
            seed: self.config.seed,
            config: self.config.clone(),
            poses: records(&self.poses, 0),
            factors: self.factors.clone(),
            candidates: self
                .plans
                .iter()
                .map(|p| CandidateRecord {
                    id: p.id,
                    new_poses: records(&p.new_poses, n),
                    factors: p.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let poses = unpack(&file.poses, 0)?;
        let n = poses.len();
        let plans = file
            .candidates
            .into_iter()
            .map(|c| {
                Ok(CandidatePlan {
                    id: c.id,
                    new_poses: unpack(&c.new_poses, n)?,
                    factors: c.factors,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(file.config, poses, file.factors, plans)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Whitened rows of a candidate's factors against the prior layout, with the
/// new poses appended as trailing pose blocks.
pub fn build_collective_jacobian(plan: &CandidatePlan, prior_poses: &[Pose2]) -> Result<CandidateAction> {
    let n = prior_poses.len();
    let m = plan.new_poses.len();
    let total = n + m;
    let pose = |id: usize| {
        if id < n {
            prior_poses.get(id).copied()
        } else {
            plan.new_poses.get(id - n).copied()
        }
    };
    let column = |id: usize| (id < total).then_some(3 * id);
    let mut rows = Vec::with_capacity(3 * plan.factors.len());
    for f in &plan.factors {
        rows.extend(factor_rows(f, pose, column)?);
    }
    let jacobian = SparseRowBlock::new(3 * total, rows)?;
    let means = plan
        .new_poses
        .iter()
        .flat_map(|p| [p.x, p.y, p.theta])
        .collect();
    let blocks = vec![
        BlockSpec {
            kind: BlockKind::Pose,
            size: 3
        };
        m
    ];
    Ok(CandidateAction::with_blocks(plan.id, jacobian, means, blocks)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: usize,
    pub new_poses: Vec<PoseRecord>,
    pub factors: Vec<Factor>,
}

/// On-disk scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub poses: Vec<PoseRecord>,
    pub factors: Vec<Factor>,
    pub candidates: Vec<CandidateRecord>,
}

fn records(poses: &[Pose2], first_id: usize) -> Vec<PoseRecord> {
    poses
        .iter()
        .enumerate()
        .map(|(k, p)| PoseRecord {
            id: first_id + k,
            x: p.x,
            y: p.y,
            theta: p.theta,
        })
        .collect()
}

fn unpack(records: &[PoseRecord], first_id: usize) -> Result<Vec<Pose2>> {
    records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            if r.id != first_id + k {
                return Err(ScenarioError::LayoutMismatch(format!(
                    "pose id {} where {} was expected",
                    r.id,
                    first_id + k
                )));
            }
            Ok(Pose2::new(r.x, r.y, r.theta))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{entropy, objective};
    use crate::sparsify::detect_involvement;
    use approx::assert_relative_eq;

    fn chain(n: usize) -> (Vec<Pose2>, Vec<Factor>) {
        let poses: Vec<Pose2> = (0..n).map(|k| Pose2::new(k as f64, 0.0, 0.0)).collect();
        let mut factors = vec![Factor::prior(0, 0.1, 0.05)];
        for k in 1..n {
            factors.push(Factor::between(FactorKind::Odom, k - 1, k, 0.1, 0.05));
        }
        (poses, factors)
    }

    #[test]
    fn odometry_chain_is_block_tridiagonal() {
        let (poses, factors) = chain(3);
        let s = Scenario::assemble(ScenarioConfig::default(), poses, factors, vec![]).unwrap();
        let lam = s.prior().information().to_dense();
        for i in 0..9usize {
            for j in 0..9 {
                if (i / 3).abs_diff(j / 3) > 1 {
                    assert_eq!(lam[(i, j)], 0.0);
                }
            }
        }
        assert!(lam[(0, 3)] != 0.0);
    }

    #[test]
    fn no_factors_gives_negated_entropy() {
        let (poses, factors) = chain(3);
        let plan = CandidatePlan {
            id: 0,
            new_poses: vec![],
            factors: vec![],
        };
        let s = Scenario::assemble(ScenarioConfig::default(), poses, factors, vec![plan]).unwrap();
        assert_eq!(s.candidates()[0].jacobian.n_rows(), 0);
        let j = objective(s.prior(), &s.candidates()[0]).unwrap();
        assert_eq!(j, -entropy(s.prior()));
    }

    // Poses x0 -> x1 -> x2; candidate A closes on x0, candidate B only extends x2.
    #[test]
    fn toy_involvement_matches_hand_derivation() {
        let (poses, factors) = chain(3);
        let a = CandidatePlan {
            id: 0,
            new_poses: vec![Pose2::new(1.0, 1.0, 0.0)],
            factors: vec![
                Factor::between(FactorKind::Odom, 2, 3, 0.1, 0.05),
                Factor::between(FactorKind::Loop, 0, 3, 0.1, 0.05),
            ],
        };
        let b = CandidatePlan {
            id: 1,
            new_poses: vec![Pose2::new(3.0, 0.0, 0.0)],
            factors: vec![Factor::between(FactorKind::Odom, 2, 3, 0.1, 0.05)],
        };
        let s = Scenario::assemble(ScenarioConfig::default(), poses, factors, vec![a, b]).unwrap();
        let mask = detect_involvement(s.prior().layout(), s.candidates()).unwrap();
        assert_eq!(mask.per_candidate[0], [0, 2].into_iter().collect());
        assert_eq!(mask.per_candidate[1], [2].into_iter().collect());
        assert_eq!(mask.uninvolved(s.prior().layout()), vec![1]);
        assert_eq!(s.involved_poses(), [0, 2].into_iter().collect());
    }

    #[test]
    fn prior_reconstruction() {
        let (poses, mut factors) = chain(6);
        factors.push(Factor::between(FactorKind::Loop, 0, 5, 0.1, 0.05));
        let s = Scenario::assemble(ScenarioConfig::default(), poses.clone(), factors.clone(), vec![])
            .unwrap();
        let mut dense = nalgebra::DMatrix::zeros(18, 18);
        for f in &factors {
            for row in factor_rows(f, |id| poses.get(id).copied(), |id| Some(3 * id)).unwrap() {
                let mut v = nalgebra::DVector::zeros(18);
                for (c, x) in row {
                    v[c] = x;
                }
                dense += &v * v.transpose();
            }
        }
        let got = s.prior().information().to_dense();
        let scale = dense.amax();
        assert_relative_eq!(got, dense, epsilon = 1e-8 * scale);
    }
}
