use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Result, Scenario, ScenarioError};
use crate::belief::{ln_2pi_e, nnz_report, GaussianBelief};
use crate::bounds::{
    determinant_bounds, post_solution_loss_bound, se2_noise_config, topological_bounds, Monotonicity,
    ObjectiveBounds, PoseGraph,
};
use crate::decision::{
    action_consistent, action_consistent_with_tolerance, balanced_offset_upper, offset,
    rank_correlation, simplification_loss, solve, DecisionProblem,
};
use crate::sparsify::{detect_involvement, sparsify_belief, SparsificationMode, SparsificationSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOptions {
    /// Timing repetitions per mode; medians are reported.
    pub repetitions: usize,
    /// Evaluation pool size; `None` uses all available cores.
    pub workers: Option<usize>,
    /// Angular:position variance ratios for the topological loss bound.
    pub ratios: Vec<f64>,
    pub consistency_tol: f64,
    /// Relative slack for floating-point comparisons in bound checks.
    pub check_tol: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            repetitions: 5,
            workers: None,
            ratios: vec![0.01, 0.25, 0.85],
            consistency_tol: 1e-9,
            check_tol: 1e-9,
        }
    }
}

/// Median wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub sparsify_s: f64,
    pub evaluate_s: f64,
    pub total_s: f64,
}

impl Timing {
    pub fn sparsify_share(&self) -> f64 {
        if self.total_s > 0.0 {
            self.sparsify_s / self.total_s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: SparsificationMode,
    pub sparsified_blocks: usize,
    pub values: Vec<f64>,
    pub best_index: usize,
    pub root_nnz: usize,
    pub info_nnz: usize,
    pub timing: Timing,
    /// Absent for the baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    pub offset: f64,
    pub balanced_offset_upper: f64,
    pub max_discrepancy: f64,
    pub rank_correlation: f64,
    pub action_consistent: bool,
    pub action_consistent_tol: bool,
    /// Determinant bounds on this mode's objective values.
    pub determinant: Vec<ObjectiveBounds>,
    /// Loss bound from determinant bounds on the original objective.
    pub loss_bound_det: f64,
    /// Loss bound from topological bounds, one per session ratio.
    pub loss_bound_top: Vec<f64>,
    /// Loss bound from topological bounds at the scenario's own noise ratio.
    pub loss_bound_top_actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub seed: u64,
    pub prior_dim: usize,
    pub n_prior_poses: usize,
    pub candidate_ids: Vec<usize>,
    pub uninvolved_blocks: usize,
    pub uninvolved_ratio: f64,
    pub ratios: Vec<f64>,
    pub actual_ratio: f64,
    /// Topological bounds on the original objective, per ratio then candidate.
    pub topological: Vec<Vec<ObjectiveBounds>>,
    pub topological_actual: Vec<ObjectiveBounds>,
    pub determinant_original: Vec<ObjectiveBounds>,
    /// Baseline first, then the requested modes in order.
    pub modes: Vec<ModeReport>,
    /// Bound checks that failed.
    pub violations: Vec<String>,
}

impl SessionReport {
    pub fn baseline(&self) -> &ModeReport {
        &self.modes[0]
    }

    pub fn mode(&self, mode: SparsificationMode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

pub(super) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Solves the session's decision problem on the original prior and on each
/// sparsified prior, and assembles metrics and bounds.
pub fn run_session(
    scenario: &Scenario,
    modes: &[SparsificationSpec],
    opts: &SessionOptions,
) -> Result<SessionReport> {
    if opts.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(ScenarioError::InvalidConfig("ratios must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| ScenarioError::Pool(e.to_string()))?;
    pool.install(|| run_inner(scenario, modes, opts))
}

struct Envelope {
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl Envelope {
    fn new(b: &[ObjectiveBounds]) -> Self {
        Self {
            lb: b.iter().map(|x| x.lb).collect(),
            ub: b.iter().map(|x| x.ub).collect(),
        }
    }

    fn loss_bound(&self, values: &[f64], best: usize) -> Result<f64> {
        Ok(post_solution_loss_bound(
            values,
            best,
            &self.ub,
            self.lb[best],
            Monotonicity::None,
        )?)
    }
}

fn run_inner(
    scenario: &Scenario,
    modes: &[SparsificationSpec],
    opts: &SessionOptions,
) -> Result<SessionReport> {
    let prior = scenario.prior();
    let candidates = scenario.candidates();
    let problem = DecisionProblem::new(prior.clone(), candidates.to_vec())?;
    let mask = detect_involvement(prior.layout(), candidates)?;
    let n_blocks = prior.layout().len();
    let uninvolved = mask.uninvolved(prior.layout()).len();
    let reps = opts.repetitions.max(1);
    let mut violations = Vec::new();
    let close = |a: f64, b: f64| a <= b + opts.check_tol * a.abs().max(b.abs()).max(1.0);

    let determinant_original = candidates
        .par_iter()
        .map(|a| determinant_bounds(prior, a))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let noise = scenario.config().odometry_noise;
    let graphs = (0..candidates.len())
        .map(|k| scenario.pose_graph(k))
        .collect::<Result<Vec<PoseGraph>>>()?;
    let lever = (0..candidates.len())
        .map(|k| scenario.max_lever_sq(k))
        .fold(0.0, f64::max);
    let top_bounds = |angular_std: f64| -> Result<Vec<ObjectiveBounds>> {
        graphs
            .iter()
            .map(|g| {
                let n_poses = g.n_nodes() - 1;
                let cfg = se2_noise_config(n_poses, noise.position_std, angular_std, lever)?;
                let (lb, ub) = topological_bounds(g, &cfg)?;
                let c = 3.0 * n_poses as f64 * ln_2pi_e();
                Ok(ObjectiveBounds {
                    lb: 0.5 * (lb - c),
                    ub: 0.5 * (ub - c),
                })
            })
            .collect()
    };
    let topological = opts
        .ratios
        .iter()
        .map(|r| top_bounds(noise.position_std * r.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let topological_actual = top_bounds(noise.angular_std)?;

    let mut specs = vec![SparsificationSpec::none()];
    for s in modes {
        if s.mode != SparsificationMode::None && !specs.contains(s) {
            specs.push(s.clone());
        }
    }

    let mut reports: Vec<ModeReport> = Vec::with_capacity(specs.len());
    for spec in &specs {
        let blocks = spec.resolve(prior.layout(), Some(&mask))?.len();
        let mut times = (Vec::new(), Vec::new(), Vec::new());
        let mut last: Option<(Option<GaussianBelief>, crate::decision::Solution)> = None;
        for _ in 0..reps {
            let t0 = Instant::now();
            let simplified = match spec.mode {
                SparsificationMode::None => None,
                _ => Some(sparsify_belief(prior, spec, Some(&mask))?),
            };
            let t1 = Instant::now();
            let sol = match &simplified {
                None => solve(&problem)?,
                Some(b) => solve(&problem.with_belief(b.clone()))?,
            };
            let t2 = Instant::now();
            times.0.push((t1 - t0).as_secs_f64());
            times.1.push((t2 - t1).as_secs_f64());
            times.2.push((t2 - t0).as_secs_f64());
            last = Some((simplified, sol));
        }
        let (simplified, sol) = last.expect("at least one repetition");
        let belief = simplified.as_ref().unwrap_or(prior);
        let nnz = nnz_report(belief);
        let timing = Timing {
            sparsify_s: median(times.0),
            evaluate_s: median(times.1),
            total_s: median(times.2),
        };

        let orig = reports.first().map_or(&sol.values, |b| &b.values).clone();
        let is_baseline = spec.mode == SparsificationMode::None;
        let loss = simplification_loss(&orig, sol.best_index)?;
        let determinant = candidates
            .par_iter()
            .map(|a| determinant_bounds(belief, a))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for (k, (bd, &j)) in determinant.iter().zip(&sol.values).enumerate() {
            if !(close(bd.lb, j) && close(j, bd.ub)) {
                violations.push(format!(
                    "{} mode, candidate {k}: determinant bounds [{}, {}] miss {j}",
                    spec.mode, bd.lb, bd.ub
                ));
            }
        }

        let det_env = Envelope::new(&determinant_original);
        let loss_bound_det = det_env.loss_bound(&sol.values, sol.best_index)?;
        let loss_bound_top = topological
            .iter()
            .map(|t| Envelope::new(t).loss_bound(&sol.values, sol.best_index))
            .collect::<Result<Vec<_>>>()?;
        let loss_bound_top_actual =
            Envelope::new(&topological_actual).loss_bound(&sol.values, sol.best_index)?;
        for (name, bound) in [("determinant", loss_bound_det), ("topological", loss_bound_top_actual)] {
            if !close(loss, bound) {
                violations.push(format!(
                    "{} mode: {name} loss bound {bound} below loss {loss}",
                    spec.mode
                ));
            }
        }

        reports.push(ModeReport {
            mode: spec.mode,
            sparsified_blocks: blocks,
            best_index: sol.best_index,
            root_nnz: nnz.root_nnz,
            info_nnz: nnz.info_nnz,
            timing,
            loss: (!is_baseline).then_some(loss),
            offset: offset(&orig, &sol.values, None)?,
            balanced_offset_upper: balanced_offset_upper(&orig, &sol.values)?,
            max_discrepancy: orig
                .iter()
                .zip(&sol.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            rank_correlation: if orig.len() >= 2 {
                rank_correlation(&orig, &sol.values)?
            } else {
                1.0
            },
            action_consistent: action_consistent(&orig, &sol.values)?,
            action_consistent_tol: action_consistent_with_tolerance(
                &orig,
                &sol.values,
                opts.consistency_tol,
            )?,
            determinant,
            loss_bound_det,
            loss_bound_top,
            loss_bound_top_actual,
            values: sol.values,
        });
    }

    for (k, (t, &j)) in topological_actual.iter().zip(&reports[0].values).enumerate() {
        if !(close(t.lb, j) && close(j, t.ub)) {
            violations.push(format!(
                "candidate {k}: topological bounds [{}, {}] miss {j}",
                t.lb, t.ub
            ));
        }
    }

    Ok(SessionReport {
        seed: scenario.config().seed,
        prior_dim: prior.dim(),
        n_prior_poses: scenario.n_prior_poses(),
        candidate_ids: candidates.iter().map(|a| a.id).collect(),
        uninvolved_blocks: uninvolved,
        uninvolved_ratio: uninvolved as f64 / n_blocks as f64,
        ratios: opts.ratios.clone(),
        actual_ratio: noise.ratio(),
        topological,
        topological_actual,
        determinant_original,
        modes: reports,
        violations,
    })
}
