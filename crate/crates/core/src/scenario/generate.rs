use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{CandidatePlan, Factor, FactorKind, Pose2, Result, Scenario, ScenarioConfig, ScenarioError};

/// Prior poses this close to the end of the executed path are not used as
/// loop-closure targets.
const LOOP_GAP: usize = 10;
const GOAL_ATTEMPTS: usize = 20;

fn wrap(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("finite non-negative std")
}

/// Deterministic scenario for `cfg.seed`.
///
/// The walk and the candidates draw from separate streams, so the prior
/// trajectory does not depend on the loop-closure radius or candidate
/// settings.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut walk_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut plan_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    plan_rng.set_stream(1);

    let poses = random_walk(cfg, &mut walk_rng);
    let factors = prior_factors(cfg, &poses);

    let n = poses.len();
    let mut plans = Vec::new();
    let mut feasible = false;
    for _ in 0..GOAL_ATTEMPTS {
        plans = candidate_plans(cfg, &poses, &mut plan_rng);
        if n < 10 || has_uninvolved_pose(n, &plans) {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(ScenarioError::InfeasibleConfig(format!(
            "every prior pose is involved after {GOAL_ATTEMPTS} goal placements"
        )));
    }
    Scenario::assemble(cfg.clone(), poses, factors, plans)
}

fn has_uninvolved_pose(n: usize, plans: &[CandidatePlan]) -> bool {
    let mut involved = vec![false; n];
    for f in plans.iter().flat_map(|p| &p.factors) {
        for id in [f.i, f.j] {
            if id < n {
                involved[id] = true;
            }
        }
    }
    involved.iter().any(|&x| !x)
}

fn random_walk(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<Pose2> {
    let ext = cfg.world_extent;
    let turn = normal(cfg.turn_std);
    let mut heading: f64 = rng.gen_range(-PI..PI);
    let (mut x, mut y) = (ext / 2.0, ext / 2.0);
    let mut poses = vec![Pose2::new(x, y, heading)];
    for _ in 1..cfg.n_prior_poses {
        heading += turn.sample(rng);
        let (mut nx, mut ny) = (x + cfg.step_length * heading.cos(), y + cfg.step_length * heading.sin());
        if !(0.0..=ext).contains(&nx) {
            heading = PI - heading;
            nx = x + cfg.step_length * heading.cos();
        }
        if !(0.0..=ext).contains(&ny) {
            heading = -heading;
            ny = y + cfg.step_length * heading.sin();
        }
        x = nx.clamp(0.0, ext);
        y = ny.clamp(0.0, ext);
        heading = wrap(heading);
        poses.push(Pose2::new(x, y, heading));
    }
    poses
}

/// Anchor on pose 0, odometry along the path, and for each pose the nearest
/// sufficiently older pose within the loop-closure radius.
fn prior_factors(cfg: &ScenarioConfig, poses: &[Pose2]) -> Vec<Factor> {
    let (sp, st) = (cfg.odometry_noise.position_std, cfg.odometry_noise.angular_std);
    let mut factors = vec![Factor::prior(0, sp, st)];
    for k in 1..poses.len() {
        factors.push(Factor::between(FactorKind::Odom, k - 1, k, sp, st));
    }
    for j in LOOP_GAP..poses.len() {
        if let Some(i) = nearest(&poses[..=j - LOOP_GAP], &poses[j], cfg.loop_closure_radius) {
            factors.push(Factor::between(FactorKind::Loop, i, j, sp, st));
        }
    }
    factors
}

fn nearest(pool: &[Pose2], p: &Pose2, radius: f64) -> Option<usize> {
    let r2 = radius * radius;
    pool.iter()
        .enumerate()
        .map(|(i, q)| (i, q.distance_sq(p)))
        .filter(|&(_, d)| d <= r2)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Polyline paths from the last pose through spread-out waypoints to a goal
/// near an older pose, sampled at `candidate_length` points.
fn candidate_plans(cfg: &ScenarioConfig, poses: &[Pose2], rng: &mut ChaCha8Rng) -> Vec<CandidatePlan> {
    let n = poses.len();
    let ext = cfg.world_extent;
    let start = poses[n - 1];
    let recent = (n / 4).max(LOOP_GAP);
    let goal_anchor = if n > recent {
        poses[rng.gen_range(0..n - recent)]
    } else {
        Pose2::new(rng.gen_range(0.0..ext), rng.gen_range(0.0..ext), 0.0)
    };
    let jitter = normal(0.5);
    let goal = (
        (goal_anchor.x + jitter.sample(rng)).clamp(0.0, ext),
        (goal_anchor.y + jitter.sample(rng)).clamp(0.0, ext),
    );

    let (dx, dy) = (goal.0 - start.x, goal.1 - start.y);
    let span = dx.hypot(dy);
    let (px, py) = if span > 0.0 { (-dy / span, dx / span) } else { (0.0, 1.0) };
    let width = (0.5 * span).max(2.0 * cfg.loop_closure_radius);
    let step_jitter = normal(0.1 * cfg.step_length);
    let (sp, st) = (cfg.odometry_noise.position_std, cfg.odometry_noise.angular_std);
    let k_total = cfg.n_candidates;
    let eligible = n.saturating_sub(LOOP_GAP);

    (0..k_total)
        .map(|k| {
            let spread = if k_total > 1 {
                2.0 * k as f64 / (k_total - 1) as f64 - 1.0
            } else {
                0.0
            };
            let mid = (start.x + 0.5 * dx, start.y + 0.5 * dy);
            let wp = (
                (mid.0 + spread * width * px + jitter.sample(rng)).clamp(0.0, ext),
                (mid.1 + spread * width * py + jitter.sample(rng)).clamp(0.0, ext),
            );
            let pts = sample_polyline(&[(start.x, start.y), wp, goal], cfg.candidate_length);
            let mut new_poses = Vec::with_capacity(pts.len());
            let mut prev = (start.x, start.y);
            for (x, y) in pts {
                let x = (x + step_jitter.sample(rng)).clamp(0.0, ext);
                let y = (y + step_jitter.sample(rng)).clamp(0.0, ext);
                let theta = (y - prev.1).atan2(x - prev.0);
                new_poses.push(Pose2::new(x, y, theta));
                prev = (x, y);
            }

            let mut factors = Vec::new();
            let mut last = n - 1;
            for (s, p) in new_poses.iter().enumerate() {
                let id = n + s;
                factors.push(Factor::between(FactorKind::Odom, last, id, sp, st));
                if let Some(i) = nearest(&poses[..eligible], p, cfg.loop_closure_radius) {
                    factors.push(Factor::between(FactorKind::Loop, i, id, sp, st));
                }
                last = id;
            }
            CandidatePlan {
                id: k,
                new_poses,
                factors,
            }
        })
        .collect()
}

/// `count` points at equal arc-length fractions `1/count, …, 1` along the
/// polyline.
fn sample_polyline(pts: &[(f64, f64)], count: usize) -> Vec<(f64, f64)> {
    let seg: Vec<f64> = pts.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).collect();
    let total: f64 = seg.iter().sum();
    (1..=count)
        .map(|s| {
            let mut target = total * s as f64 / count as f64;
            for (k, &len) in seg.iter().enumerate() {
                if target <= len || k == seg.len() - 1 {
                    let t = if len > 0.0 { (target / len).min(1.0) } else { 1.0 };
                    let (a, b) = (pts[k], pts[k + 1]);
                    return (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
                }
                target -= len;
            }
            *pts.last().expect("non-empty polyline")
        })
        .collect()
}
