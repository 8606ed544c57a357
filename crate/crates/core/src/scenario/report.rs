use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::session::median;
use super::{Result, SessionReport};
use crate::sparsify::SparsificationMode;

/// Version of the per-candidate CSV column contract.
///
/// Columns, in order: `schema_version, seed, mode, candidate_id, objective,
/// objective_original, discrepancy, selected, lb_det, ub_det, lb_top, ub_top,
/// loss, loss_bound_det, loss_bound_top, loss_bound_top_r<ratio>…, root_nnz,
/// info_nnz, sparsify_ms, evaluate_ms, total_ms`. One `loss_bound_top_r`
/// column per requested ratio; `loss` is empty for the baseline. The last
/// three columns are wall-clock timings.
pub const CSV_SCHEMA_VERSION: u32 = 1;

fn csv_header(ratios: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = [
        "schema_version",
        "seed",
        "mode",
        "candidate_id",
        "objective",
        "objective_original",
        "discrepancy",
        "selected",
        "lb_det",
        "ub_det",
        "lb_top",
        "ub_top",
        "loss",
        "loss_bound_det",
        "loss_bound_top",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(ratios.iter().map(|r| format!("loss_bound_top_r{r}")));
    h.extend(["root_nnz", "info_nnz", "sparsify_ms", "evaluate_ms", "total_ms"].map(String::from));
    h
}

/// One row per candidate and mode.
pub fn write_session_csv<W: Write>(w: W, report: &SessionReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header(&report.ratios))?;
    let base = &report.baseline().values;
    for m in &report.modes {
        for (k, &id) in report.candidate_ids.iter().enumerate() {
            let top = report.topological_actual[k];
            let mut rec = vec![
                CSV_SCHEMA_VERSION.to_string(),
                report.seed.to_string(),
                m.mode.to_string(),
                id.to_string(),
                m.values[k].to_string(),
                base[k].to_string(),
                (base[k] - m.values[k]).abs().to_string(),
                u8::from(m.best_index == k).to_string(),
                m.determinant[k].lb.to_string(),
                m.determinant[k].ub.to_string(),
                top.lb.to_string(),
                top.ub.to_string(),
                m.loss.map(|l| l.to_string()).unwrap_or_default(),
                m.loss_bound_det.to_string(),
                m.loss_bound_top_actual.to_string(),
            ];
            rec.extend(m.loss_bound_top.iter().map(|b| b.to_string()));
            rec.extend([
                m.root_nnz.to_string(),
                m.info_nnz.to_string(),
                format!("{:.6}", m.timing.sparsify_s * 1e3),
                format!("{:.6}", m.timing.evaluate_s * 1e3),
                format!("{:.6}", m.timing.total_s * 1e3),
            ]);
            out.write_record(rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchModeSummary {
    pub mode: SparsificationMode,
    pub sessions: usize,
    /// Median fraction of prior blocks no candidate touches.
    pub uninvolved_ratio: f64,
    /// Median relative change of total decision time against the baseline.
    pub runtime_delta: f64,
    /// Median share of the decision time spent sparsifying.
    pub sparsify_share: f64,
    /// Median relative change of root nonzeros against the baseline.
    pub root_nnz_delta: f64,
    pub info_nnz_delta: f64,
    pub median_rank_correlation: f64,
    pub min_rank_correlation: f64,
    pub max_loss: f64,
    pub consistent_fraction: f64,
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub sessions: usize,
    pub modes: Vec<BenchModeSummary>,
}

fn rel(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b - 1.0
    } else {
        0.0
    }
}

/// Aggregates sessions into per-mode medians.
pub fn bench_summary(reports: &[SessionReport]) -> BenchSummary {
    let mut modes: Vec<SparsificationMode> = Vec::new();
    for r in reports {
        for m in &r.modes {
            if !modes.contains(&m.mode) {
                modes.push(m.mode);
            }
        }
    }
    let summaries = modes
        .into_iter()
        .map(|mode| {
            let rows: Vec<_> = reports
                .iter()
                .filter_map(|r| r.mode(mode).map(|m| (r, m)))
                .collect();
            let collect = |f: &dyn Fn(&SessionReport, &super::ModeReport) -> f64| {
                rows.iter().map(|(r, m)| f(r, m)).collect::<Vec<f64>>()
            };
            let rho = collect(&|_, m| m.rank_correlation);
            BenchModeSummary {
                mode,
                sessions: rows.len(),
                uninvolved_ratio: median(collect(&|r, _| r.uninvolved_ratio)),
                runtime_delta: median(collect(&|r, m| rel(m.timing.total_s, r.baseline().timing.total_s))),
                sparsify_share: median(collect(&|_, m| m.timing.sparsify_share())),
                root_nnz_delta: median(collect(&|r, m| {
                    rel(m.root_nnz as f64, r.baseline().root_nnz as f64)
                })),
                info_nnz_delta: median(collect(&|r, m| {
                    rel(m.info_nnz as f64, r.baseline().info_nnz as f64)
                })),
                median_rank_correlation: median(rho.clone()),
                min_rank_correlation: rho.iter().copied().fold(f64::INFINITY, f64::min),
                max_loss: collect(&|_, m| m.loss.unwrap_or(0.0))
                    .into_iter()
                    .fold(0.0, f64::max),
                consistent_fraction: rows.iter().filter(|(_, m)| m.action_consistent_tol).count()
                    as f64
                    / rows.len().max(1) as f64,
                bound_violations: reports.iter().map(|r| r.violations.len()).sum(),
            }
        })
        .collect();
    BenchSummary {
        sessions: reports.len(),
        modes: summaries,
    }
}

/// One row per session and mode.
pub fn write_bench_csv<W: Write>(w: W, reports: &[SessionReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "schema_version",
        "seed",
        "prior_dim",
        "n_candidates",
        "mode",
        "uninvolved_ratio",
        "best_index",
        "loss",
        "max_discrepancy",
        "rank_correlation",
        "action_consistent",
        "root_nnz",
        "info_nnz",
        "sparsify_ms",
        "evaluate_ms",
        "total_ms",
    ])?;
    for r in reports {
        for m in &r.modes {
            out.write_record([
                CSV_SCHEMA_VERSION.to_string(),
                r.seed.to_string(),
                r.prior_dim.to_string(),
                r.candidate_ids.len().to_string(),
                m.mode.to_string(),
                r.uninvolved_ratio.to_string(),
                m.best_index.to_string(),
                m.loss.map(|l| l.to_string()).unwrap_or_default(),
                m.max_discrepancy.to_string(),
                m.rank_correlation.to_string(),
                m.action_consistent_tol.to_string(),
                m.root_nnz.to_string(),
                m.info_nnz.to_string(),
                format!("{:.6}", m.timing.sparsify_s * 1e3),
                format!("{:.6}", m.timing.evaluate_s * 1e3),
                format!("{:.6}", m.timing.total_s * 1e3),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} session(s), medians", self.sessions)?;
        writeln!(
            f,
            "{:<11} {:>10} {:>9} {:>11} {:>10} {:>7} {:>7} {:>9} {:>10}",
            "mode", "uninv.var", "run-time", "sparsify%", "non-zeros", "rho", "min rho", "max loss", "consistent"
        )?;
        for m in &self.modes {
            writeln!(
                f,
                "{:<11} {:>9.1}% {:>8.1}% {:>10.2}% {:>9.1}% {:>7.3} {:>7.3} {:>9.2e} {:>9.0}%",
                m.mode.as_str(),
                100.0 * m.uninvolved_ratio,
                100.0 * m.runtime_delta,
                100.0 * m.sparsify_share,
                100.0 * m.root_nnz_delta,
                m.median_rank_correlation,
                m.min_rank_correlation,
                m.max_loss,
                100.0 * m.consistent_fraction,
            )?;
        }
        Ok(())
    }
}
