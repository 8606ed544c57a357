//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any of them fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bsparse::belief::{ln_2pi_e, objective, CandidateAction, GaussianBelief, VariableLayout};
use bsparse::bounds::{
    post_solution_loss_bound, rank1_alpha, rank1_offset_bound, spanning_tree_count, topological_bounds,
    Monotonicity, PoseGraph, TopologicalNoiseConfig,
};
use bsparse::decision::{
    action_consistent, argmax, balanced_offset_upper, rank_correlation, simplification_loss,
};
use bsparse::linalg::{permute_symmetric, Permutation, SparseRowBlock, SparseSymmetric};
use bsparse::scenario::{generate, run_session, Scenario, ScenarioConfig, SessionOptions, SessionReport};
use bsparse::sparsify::{
    detect_involvement, sparsify_belief, sparsify_root, SparsificationMode, SparsificationSpec,
};
use common::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sparsified_modes() -> Vec<SparsificationSpec> {
    vec![SparsificationSpec::uninvolved(), SparsificationSpec::full()]
}

fn quantiles(mut v: Vec<f64>) -> [f64; 5] {
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    [q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)]
}

/// The 100 seeded sessions shared by the exactness, bound and sparsity checks.
fn sessions() -> (Vec<SessionReport>, f64) {
    let t = Instant::now();
    let reports = (0..100u64)
        .map(|seed| {
            let mut g = rng(1000 + seed);
            let cfg = ScenarioConfig {
                seed,
                n_prior_poses: g.gen_range(20..=200),
                n_candidates: g.gen_range(5..=10),
                candidate_length: g.gen_range(5..=15),
                ..Default::default()
            };
            let s = generate(&cfg).expect("scenario");
            let opts = SessionOptions {
                repetitions: 1,
                ..Default::default()
            };
            run_session(&s, &sparsified_modes(), &opts).expect("session")
        })
        .collect();
    (reports, t.elapsed().as_secs_f64())
}

fn theorem_exactness(reports: &[SessionReport], secs: f64) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = 0;
    for r in reports {
        let u = r.mode(SparsificationMode::Uninvolved).unwrap();
        worst = worst.max(u.max_discrepancy);
        if !(u.max_discrepancy <= 1e-6 && u.loss == Some(0.0) && u.rank_correlation == 1.0) {
            bad += 1;
        }
    }
    let dims: Vec<usize> = reports.iter().map(|r| r.prior_dim).collect();
    outcome(
        bad == 0 && secs <= 120.0,
        format!(
            "{} sessions, dims {}..{}, max discrepancy {worst:.2e}, {bad} inexact, {secs:.1} s",
            reports.len(),
            dims.iter().min().unwrap(),
            dims.iter().max().unwrap()
        ),
    )
}

fn determinant_preservation() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for seed in 0..500u64 {
        let mut g = rng(seed);
        let blocks = g.gen_range(2..=45);
        let density = g.gen_range(0.02..0.4);
        let b = random_belief(&mut g, blocks, density);
        if b.dim() > 120 {
            continue;
        }
        let involved: Vec<usize> = random_subset(&mut g, blocks, 0.3).into_iter().collect();
        let a = random_candidate(&mut g, 0, b.layout(), &involved, 0);
        let mask = detect_involvement(b.layout(), std::slice::from_ref(&a)).unwrap();
        // S mixes never-involved blocks with some involved ones
        let extra: Vec<usize> = involved.iter().copied().filter(|_| g.gen_bool(0.5)).collect();
        let bs = sparsify_belief(&b, &SparsificationSpec::custom(extra), Some(&mask)).unwrap();
        let gap = (bs.root().logdet() - b.root().logdet()).abs();
        worst = worst.max(gap / b.dim() as f64);
        if gap > 1e-9 * b.dim() as f64 {
            bad += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs <= 30.0,
        format!("500 cases, max |Δ logdet|/dim {worst:.2e}, {bad} violations, {secs:.2} s"),
    )
}

fn factor_shape() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = 0;
    for seed in 0..200u64 {
        let mut g = rng(7_000 + seed);
        let n = g.gen_range(2..40);
        let density = g.gen_range(0.05..0.5);
        let r = random_root(&mut g, n, density);
        let s: Vec<usize> = random_subset(&mut g, n, 0.5).into_iter().collect();
        let rs = sparsify_root(&r, &s).unwrap();
        let upper = (0..n).all(|i| rs.off_row(i).iter().all(|&(j, _)| j > i));
        let rows_cleared = s.iter().all(|&i| rs.off_row(i).is_empty());

        let p = Permutation::selected_first(n, &s).unwrap();
        let lam_p = permute_symmetric(&r.gram(), &p).unwrap().to_dense();
        let mut u = lam_p.cholesky().unwrap().l().transpose();
        for i in 0..s.len() {
            for j in i + 1..n {
                u[(i, j)] = 0.0;
            }
        }
        let sq = SparseSymmetric::from_dense(&(u.transpose() * &u)).unwrap();
        let expect = permute_symmetric(&sq, &p.inverse()).unwrap().to_dense();
        let err = max_abs_diff(&rs.gram().to_dense(), &expect) / expect.amax().max(1.0);
        worst = worst.max(err);
        if !(upper && rows_cleared && err <= 1e-9) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("200 cases, max relative error {worst:.2e}, {bad} violations"))
}

fn update_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = 0;
    let mut augmenting = 0;
    for seed in 0..200u64 {
        let mut g = rng(9_000 + seed);
        let blocks = g.gen_range(1..20);
        let density = g.gen_range(0.05..0.4);
        let b = random_belief(&mut g, blocks, density);
        let n_new = g.gen_range(0..5);
        augmenting += usize::from(n_new > 0);
        let touched: Vec<usize> = random_subset(&mut g, blocks, 0.5).into_iter().collect();
        let a = random_candidate(&mut g, 0, b.layout(), &touched, n_new);
        let ld = 2.0 * objective(&b, &a).unwrap() + (b.dim() + n_new) as f64 * ln_2pi_e();
        let oracle = dense_logdet(&dense_posterior(&b.information(), &a.jacobian));
        let rel = (ld - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-8 {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("200 cases ({augmenting} augmenting), max relative error {worst:.2e}"),
    )
}

fn rank1_case(seed: u64) -> (GaussianBelief, GaussianBelief, Vec<CandidateAction>) {
    let mut g = rng(11_000 + seed);
    let n = g.gen_range(4..25);
    let root = random_root(&mut g, n, 0.35);
    let b = GaussianBelief::new(vec![0.0; n], root, VariableLayout::scalar(n)).unwrap();
    let involved: Vec<usize> = random_subset(&mut g, n, 0.3).into_iter().collect();
    let k = g.gen_range(2..6);
    let cands = (0..k)
        .map(|id| {
            let mut row = vec![0.0; n];
            for &c in &involved {
                if g.gen_bool(0.7) {
                    row[c] = g.gen_range(-2.0..2.0);
                }
            }
            row[involved[g.gen_range(0..involved.len())]] = g.gen_range(0.5..2.0);
            CandidateAction::new(id, SparseRowBlock::from_dense_rows(n, &[row]).unwrap(), 0, vec![]).unwrap()
        })
        .collect::<Vec<_>>();
    let mask = detect_involvement(b.layout(), &cands).unwrap();
    let extra = random_subset(&mut g, n, 0.4);
    let bs = sparsify_belief(&b, &SparsificationSpec::custom(extra), Some(&mask)).unwrap();
    (b, bs, cands)
}

fn bound_validity(reports: &[SessionReport]) -> Outcome {
    let session_violations: usize = reports.iter().map(|r| r.violations.len()).sum();
    let mut first = reports.iter().flat_map(|r| &r.violations).next().cloned();

    let mut rank1_bad = 0;
    for seed in 0..100u64 {
        let (b, bs, cands) = rank1_case(seed);
        let mask = detect_involvement(b.layout(), &cands).unwrap();
        let bound = rank1_offset_bound(&b, &bs, &cands, &mask, rank1_alpha(&cands)).unwrap();
        let values: Vec<f64> = cands.iter().map(|a| objective(&b, a).unwrap()).collect();
        let values_s: Vec<f64> = cands.iter().map(|a| objective(&bs, a).unwrap()).collect();
        let actual = values
            .iter()
            .zip(&values_s)
            .map(|(x, y)| 2.0 * (x - y).abs())
            .fold(0.0, f64::max);
        if actual > bound + 1e-9 {
            rank1_bad += 1;
            first.get_or_insert(format!("rank-1 case {seed}: offset {actual} above {bound}"));
        }
    }
    let modes = reports.first().map_or(0, |r| r.modes.len());
    outcome(
        session_violations == 0 && rank1_bad == 0,
        format!(
            "{} sessions x {modes} modes: {session_violations} violations; 100 rank-1 problems: {rank1_bad} violations{}",
            reports.len(),
            first.map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn tightness_trend() -> Outcome {
    let cfg = ScenarioConfig {
        seed: 42,
        n_prior_poses: 120,
        n_candidates: 8,
        ..Default::default()
    };
    let s = generate(&cfg).unwrap();
    let r = run_session(
        &s,
        &sparsified_modes(),
        &SessionOptions {
            repetitions: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let graphs: Vec<PoseGraph> = (0..s.candidates().len()).map(|k| s.pose_graph(k).unwrap()).collect();
    let lever = (0..graphs.len()).map(|k| s.max_lever_sq(k)).fold(0.0, f64::max);
    let mut lines = Vec::new();
    let mut monotone = true;
    for m in &r.modes {
        let mut last = f64::NEG_INFINITY;
        let mut row = Vec::new();
        for ratio in [0.01, 0.25, 0.85] {
            let cfg = TopologicalNoiseConfig::new(0.0, ratio * lever, ratio).unwrap();
            let (mut lb, mut ub) = (Vec::new(), Vec::new());
            for g in &graphs {
                let (l, u) = topological_bounds(g, &cfg).unwrap();
                let c = 3.0 * (g.n_nodes() - 1) as f64 * ln_2pi_e();
                lb.push(0.5 * (l - c));
                ub.push(0.5 * (u - c));
            }
            let bound =
                post_solution_loss_bound(&m.values, m.best_index, &ub, lb[m.best_index], Monotonicity::None).unwrap();
            monotone &= bound >= last;
            last = bound;
            row.push(format!("{bound:.3}"));
        }
        lines.push(format!("{} [{}]", m.mode, row.join(", ")));
    }
    outcome(monotone, format!("loss bound at ratios 0.01/0.25/0.85: {}", lines.join("; ")))
}

fn sparsity_reduction(reports: &[SessionReport]) -> Outcome {
    let mut eligible = 0;
    let mut reductions = Vec::new();
    let mut full_ok = true;
    for r in reports {
        let base = r.baseline().root_nnz as f64;
        let full = r.mode(SparsificationMode::Full).unwrap();
        full_ok &= full.root_nnz == r.prior_dim;
        if r.uninvolved_ratio >= 0.4 {
            eligible += 1;
            let u = r.mode(SparsificationMode::Uninvolved).unwrap();
            reductions.push(1.0 - u.root_nnz as f64 / base);
        }
    }
    let failing = reductions.iter().filter(|&&x| x < 0.3).count();
    let q = quantiles(reductions.clone());
    outcome(
        eligible > 0 && failing == 0 && full_ok,
        format!(
            "{eligible} sessions with >= 40% uninvolved blocks, reduction min {:.1}% median {:.1}% max {:.1}%, {failing} below 30%; full mode nnz = dim: {full_ok}",
            100.0 * q[0],
            100.0 * q[2],
            100.0 * q[4]
        ),
    )
}

fn diagonal_fidelity() -> Outcome {
    let rho: Vec<f64> = (0..20u64)
        .map(|seed| {
            let s = generate(&ScenarioConfig {
                seed: 500 + seed,
                ..Default::default()
            })
            .unwrap();
            let r = run_session(
                &s,
                &[SparsificationSpec::full()],
                &SessionOptions {
                    repetitions: 1,
                    ..Default::default()
                },
            )
            .unwrap();
            r.mode(SparsificationMode::Full).unwrap().rank_correlation
        })
        .collect();
    let q = quantiles(rho);
    outcome(
        q[2] >= 0.9,
        format!(
            "20 sessions, rho min {:.3} q1 {:.3} median {:.3} q3 {:.3} max {:.3}",
            q[0], q[1], q[2], q[3], q[4]
        ),
    )
}

fn lemma_suite() -> Outcome {
    let mut g = rng(77);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| g.gen_range(-40i32..40) as f64 * 0.25).collect() };
    let mut violations = [0usize; 5];
    for t in 0..1000 {
        let n = 2 + t % 8;
        let (a, b, c) = (draw(n), draw(n), draw(n));

        // equivalence relation
        let ab = action_consistent(&a, &b).unwrap();
        let bc = action_consistent(&b, &c).unwrap();
        if !action_consistent(&a, &a).unwrap()
            || ab != action_consistent(&b, &a).unwrap()
            || (ab && bc && !action_consistent(&a, &c).unwrap())
        {
            violations[0] += 1;
        }

        // monotone maps
        let scale = 0.5 + (t % 7) as f64;
        for f in [
            &(|x: f64| scale * x - 3.0) as &dyn Fn(f64) -> f64,
            &|x: f64| x * x * x,
            &|x: f64| x.exp(),
        ] {
            let fa: Vec<f64> = a.iter().map(|&x| f(x)).collect();
            if argmax(&a) != argmax(&fa) || !action_consistent(&a, &fa).unwrap() {
                violations[1] += 1;
            }
        }

        // zero balanced offset and consistency
        let shifted: Vec<f64> = a.iter().map(|&x| x + (t % 11) as f64 - 5.0).collect();
        if balanced_offset_upper(&a, &shifted).unwrap() != 0.0 || !action_consistent(&a, &shifted).unwrap() {
            violations[2] += 1;
        }
        if ab && simplification_loss(&a, argmax(&b).unwrap()).unwrap() != 0.0 {
            violations[2] += 1;
        }

        // loss within twice the balanced offset
        let loss = simplification_loss(&a, argmax(&b).unwrap()).unwrap();
        if !(loss >= 0.0 && loss <= 2.0 * balanced_offset_upper(&a, &b).unwrap()) {
            violations[3] += 1;
        }

        // triangle inequality
        let (gab, gbc, gac) = (
            balanced_offset_upper(&a, &b).unwrap(),
            balanced_offset_upper(&b, &c).unwrap(),
            balanced_offset_upper(&a, &c).unwrap(),
        );
        if gac > gab + gbc {
            violations[4] += 1;
        }
        let _ = rank_correlation(&a, &b).unwrap();
    }
    outcome(
        violations.iter().all(|&v| v == 0),
        format!(
            "1000 trials each; violations: equivalence {}, monotone {}, zero offset {}, loss range {}, triangle {}",
            violations[0], violations[1], violations[2], violations[3], violations[4]
        ),
    )
}

fn matrix_tree() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for n in 1..=6usize {
        let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        for mask in 0u32..(1 << all.len()) {
            let edges: Vec<(usize, usize)> = all
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = PoseGraph::new(n, edges.clone()).unwrap();
            if !g.is_connected() {
                continue;
            }
            checked += 1;
            let expect = brute_force_trees(n, &edges) as f64;
            let got = spanning_tree_count(&g).unwrap().exp();
            if (got - expect).abs() > 1e-9 * expect {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{checked} connected graphs on <= 6 nodes, {bad} mismatches"))
}

fn performance(scenario: &Scenario) -> Outcome {
    let r = run_session(
        scenario,
        &sparsified_modes(),
        &SessionOptions {
            repetitions: 5,
            workers: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let base = r.baseline().timing;
    let unin = r.mode(SparsificationMode::Uninvolved).unwrap().timing;
    let full = r.mode(SparsificationMode::Full).unwrap().timing;
    let order = unin.total_s <= base.total_s && full.total_s <= unin.total_s;
    let share = unin.sparsify_share() <= 0.10 && full.sparsify_share() <= 0.10;
    outcome(
        order && share,
        format!(
            "dim {}, {} candidates; total ms none {:.1}, uninvolved {:.1}, full {:.2}; sparsification share uninvolved {:.1}%, full {:.1}%",
            r.prior_dim,
            r.candidate_ids.len(),
            base.total_s * 1e3,
            unin.total_s * 1e3,
            full.total_s * 1e3,
            100.0 * unin.sparsify_share(),
            100.0 * full.sparsify_share()
        ),
    )
}

fn run(n: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {n:>2}. {title}: {}", o.detail);
    o.pass
}

fn main() {
    let (reports, secs) = sessions();
    let big = generate(&ScenarioConfig {
        seed: 2024,
        n_prior_poses: 340,
        n_candidates: 10,
        ..Default::default()
    })
    .unwrap();

    let results = [
        run(1, "uninvolved sparsification is exact", || theorem_exactness(&reports, secs)),
        run(2, "determinant preserved by sparsification", determinant_preservation),
        run(3, "sparsified factor shape", factor_shape),
        run(4, "low-rank update matches dense oracle", update_oracle),
        run(5, "bounds hold", || bound_validity(&reports)),
        run(6, "loss bound grows with noise ratio", tightness_trend),
        run(7, "non-zero reduction", || sparsity_reduction(&reports)),
        run(8, "diagonal belief keeps the ranking", diagonal_fidelity),
        run(9, "decision lemma properties", lemma_suite),
        run(10, "matrix-tree counts", matrix_tree),
        run(11, "decision time trend", || performance(&big)),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
