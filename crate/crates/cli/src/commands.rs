use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bsparse::belief::nnz_report;
use bsparse::scenario::{
    bench_summary, generate, run_session, write_bench_csv, write_session_csv, Scenario, SessionOptions,
    SessionReport,
};
use bsparse::sparsify::SparsificationMode;

use crate::{Command, OutputArgs, ScenarioArgs, SessionArgs};

/// Uninvolved-mode loss or discrepancy above this fails the run.
const EXACTNESS_TOL: f64 = 1e-6;
/// Exit code for a violated guarantee, as opposed to an error.
const VIOLATION: u8 = 2;

pub fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Generate { scenario, output, out } => cmd_generate(&scenario, &output, &out),
        Command::Solve {
            scenario,
            gen,
            session,
            name,
            out,
        } => cmd_solve(scenario.as_deref(), &gen, &session, &name, &out),
        Command::Bench {
            sessions,
            gen,
            session,
            name,
            out,
        } => cmd_bench(sessions, &gen, &session, &name, &out),
        Command::Bounds {
            scenario,
            gen,
            ratios,
            name,
            out,
        } => cmd_bounds(scenario.as_deref(), &gen, ratios, &name, &out),
    }
}

fn resolve(out: &OutputArgs, path: &Path) -> Result<PathBuf> {
    if path.as_os_str().is_empty() {
        bail!("empty output path");
    }
    let full = if path.is_absolute() {
        path.to_path_buf()
    } else {
        out.out_dir.join(path)
    };
    if let Some(dir) = full.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(full)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_or_generate(path: Option<&Path>, gen: &ScenarioArgs) -> Result<Scenario> {
    match path {
        Some(p) => Scenario::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(generate(&gen.config(gen.seed))?),
    }
}

fn options(session: &SessionArgs) -> Result<SessionOptions> {
    if session.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        bail!("ratios must be positive");
    }
    Ok(SessionOptions {
        repetitions: session.repetitions,
        workers: session.workers,
        ratios: session.ratios.clone(),
        ..Default::default()
    })
}

fn cmd_generate(gen: &ScenarioArgs, output: &Path, out: &OutputArgs) -> Result<ExitCode> {
    let s = generate(&gen.config(gen.seed))?;
    let path = resolve(out, output)?;
    s.save(&path).with_context(|| format!("writing {}", path.display()))?;
    let nnz = nnz_report(s.prior());
    println!(
        "wrote {}: {} poses, dim {}, root nnz {}, information nnz {}, {} candidates, {} uninvolved poses",
        path.display(),
        s.n_prior_poses(),
        s.prior().dim(),
        nnz.root_nnz,
        nnz.info_nnz,
        s.candidates().len(),
        s.n_prior_poses() - s.involved_poses().len()
    );
    Ok(ExitCode::SUCCESS)
}

/// Problems that should fail the run: bound violations and inexact
/// uninvolved-mode results.
fn invariant_failures(r: &SessionReport) -> Vec<String> {
    let mut out = r.violations.clone();
    if let Some(u) = r.mode(SparsificationMode::Uninvolved) {
        let loss = u.loss.unwrap_or(0.0);
        if loss > EXACTNESS_TOL || u.max_discrepancy > EXACTNESS_TOL {
            out.push(format!(
                "seed {}: uninvolved mode loss {loss:e}, discrepancy {:e}",
                r.seed, u.max_discrepancy
            ));
        }
    }
    out
}

fn print_session(r: &SessionReport) {
    println!(
        "seed {}: dim {}, {} candidates, {:.1}% uninvolved blocks",
        r.seed,
        r.prior_dim,
        r.candidate_ids.len(),
        100.0 * r.uninvolved_ratio
    );
    println!(
        "{:<11} {:>5} {:>10} {:>10} {:>8} {:>10} {:>10} {:>10}",
        "mode", "best", "loss", "max diff", "rho", "root nnz", "sparsify", "total"
    );
    for m in &r.modes {
        println!(
            "{:<11} {:>5} {:>10} {:>10.2e} {:>8.3} {:>10} {:>8.2}ms {:>8.2}ms",
            m.mode.as_str(),
            r.candidate_ids[m.best_index],
            m.loss.map_or("-".to_string(), |l| format!("{l:.3e}")),
            m.max_discrepancy,
            m.rank_correlation,
            m.root_nnz,
            m.timing.sparsify_s * 1e3,
            m.timing.total_s * 1e3
        );
    }
}

fn finish(failures: &[String]) -> ExitCode {
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    for f in failures {
        eprintln!("violation: {f}");
    }
    ExitCode::from(VIOLATION)
}

fn cmd_solve(
    path: Option<&Path>,
    gen: &ScenarioArgs,
    session: &SessionArgs,
    name: &str,
    out: &OutputArgs,
) -> Result<ExitCode> {
    let s = load_or_generate(path, gen)?;
    let r = run_session(&s, &session.specs()?, &options(session)?)?;
    let csv = resolve(out, Path::new(&format!("{name}.csv")))?;
    write_session_csv(create(&csv)?, &r)?;
    let json = resolve(out, Path::new(&format!("{name}.json")))?;
    let mut w = create(&json)?;
    serde_json::to_writer_pretty(&mut w, &r)?;
    w.flush()?;
    print_session(&r);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(finish(&invariant_failures(&r)))
}

fn cmd_bench(
    sessions: u64,
    gen: &ScenarioArgs,
    session: &SessionArgs,
    name: &str,
    out: &OutputArgs,
) -> Result<ExitCode> {
    if sessions == 0 {
        bail!("--sessions must be positive");
    }
    let specs = session.specs()?;
    let opts = options(session)?;
    let mut reports = Vec::with_capacity(sessions as usize);
    for seed in gen.seed..gen.seed + sessions {
        let s = generate(&gen.config(seed))?;
        reports.push(run_session(&s, &specs, &opts)?);
    }
    let summary = bench_summary(&reports);
    let csv = resolve(out, Path::new(&format!("{name}.csv")))?;
    write_bench_csv(create(&csv)?, &reports)?;
    let json = resolve(out, Path::new(&format!("{name}.json")))?;
    let mut w = create(&json)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.flush()?;
    print!("{summary}");
    println!("wrote {} and {}", csv.display(), json.display());
    let failures: Vec<String> = reports.iter().flat_map(invariant_failures).collect();
    Ok(finish(&failures))
}

fn cmd_bounds(
    path: Option<&Path>,
    gen: &ScenarioArgs,
    ratios: Vec<f64>,
    name: &str,
    out: &OutputArgs,
) -> Result<ExitCode> {
    let s = load_or_generate(path, gen)?;
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        bail!("ratios must be positive");
    }
    let opts = SessionOptions {
        repetitions: 1,
        ratios: ratios.clone(),
        ..Default::default()
    };
    let r = run_session(&s, &[], &opts)?;
    let path = resolve(out, Path::new(&format!("{name}.csv")))?;
    let mut w = create(&path)?;
    let mut header = vec![
        "candidate_id".to_string(),
        "objective".into(),
        "lb_det".into(),
        "ub_det".into(),
        "lb_top".into(),
        "ub_top".into(),
    ];
    for ratio in &ratios {
        header.push(format!("lb_top_r{ratio}"));
        header.push(format!("ub_top_r{ratio}"));
    }
    writeln!(w, "{}", header.join(","))?;
    let values = &r.baseline().values;
    for (k, id) in r.candidate_ids.iter().enumerate() {
        let mut row = vec![
            id.to_string(),
            values[k].to_string(),
            r.determinant_original[k].lb.to_string(),
            r.determinant_original[k].ub.to_string(),
            r.topological_actual[k].lb.to_string(),
            r.topological_actual[k].ub.to_string(),
        ];
        for t in &r.topological {
            row.push(t[k].lb.to_string());
            row.push(t[k].ub.to_string());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    println!(
        "{:>9} {:>12} {:>25} {:>25}",
        "candidate", "objective", "determinant", "topological"
    );
    for (k, id) in r.candidate_ids.iter().enumerate() {
        let (d, t) = (r.determinant_original[k], r.topological_actual[k]);
        println!(
            "{id:>9} {:>12.3} [{:>10.3}, {:>10.3}] [{:>10.3}, {:>10.3}]",
            values[k], d.lb, d.ub, t.lb, t.ub
        );
    }
    println!("wrote {}", path.display());
    Ok(finish(&r.violations))
}
