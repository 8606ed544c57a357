use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use bsparse::scenario::{NoiseModel, ScenarioConfig};
use bsparse::sparsify::{SparsificationMode, SparsificationSpec};
use clap::{Args, Parser, Subcommand};

mod commands;

/// Belief sparsification for planning in pose-SLAM sessions.
#[derive(Debug, Parser)]
#[command(name = "bsparse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scenario file.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file.
        #[arg(short, long, default_value = "scenario.json")]
        output: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve one session under the requested modes.
    Solve {
        /// Scenario file; when omitted, one is generated from the scenario flags.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        gen: ScenarioArgs,
        #[command(flatten)]
        session: SessionArgs,
        /// Report file stem inside the output directory.
        #[arg(long, default_value = "session")]
        name: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run many seeded sessions and summarize them.
    Bench {
        /// Number of sessions; seeds run from `--seed` upwards.
        #[arg(long, default_value_t = 20)]
        sessions: u64,
        #[command(flatten)]
        gen: ScenarioArgs,
        #[command(flatten)]
        session: SessionArgs,
        #[arg(long, default_value = "bench")]
        name: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Objective bounds per candidate next to the exact objective.
    Bounds {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        gen: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.25,0.85")]
        ratios: Vec<f64>,
        #[arg(long, default_value = "bounds")]
        name: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_poses: usize,
    #[arg(long, default_value_t = 8)]
    candidates: usize,
    /// New poses per candidate.
    #[arg(long, default_value_t = 15)]
    candidate_length: usize,
    #[arg(long, default_value_t = 2.0)]
    loop_radius: f64,
    #[arg(long, default_value_t = 20.0)]
    world_extent: f64,
    #[arg(long, default_value_t = 0.1)]
    position_std: f64,
    #[arg(long, default_value_t = 0.05)]
    angular_std: f64,
}

impl ScenarioArgs {
    fn config(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            n_prior_poses: self.n_poses,
            world_extent: self.world_extent,
            odometry_noise: NoiseModel {
                position_std: self.position_std,
                angular_std: self.angular_std,
            },
            loop_closure_radius: self.loop_radius,
            n_candidates: self.candidates,
            candidate_length: self.candidate_length,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Sparsification modes; the unsimplified baseline always runs.
    #[arg(long, value_delimiter = ',', default_value = "uninvolved,full")]
    mode: Vec<SparsificationMode>,
    /// Block ids for custom mode.
    #[arg(long, value_delimiter = ',')]
    blocks: Vec<usize>,
    /// Angular-to-position variance ratios for the topological loss bounds.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.25,0.85")]
    ratios: Vec<f64>,
    /// Timed repetitions per mode; the median is reported.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Worker threads for candidate evaluation (default: all cores).
    #[arg(long, env = "BSPARSE_WORKERS")]
    workers: Option<usize>,
}

impl SessionArgs {
    fn specs(&self) -> Result<Vec<SparsificationSpec>> {
        if !self.blocks.is_empty() && !self.mode.contains(&SparsificationMode::Custom) {
            bail!("--blocks is only used with --mode custom");
        }
        self.mode
            .iter()
            .map(|m| match m {
                SparsificationMode::None => Ok(SparsificationSpec::none()),
                SparsificationMode::Uninvolved => Ok(SparsificationSpec::uninvolved()),
                SparsificationMode::Full => Ok(SparsificationSpec::full()),
                SparsificationMode::Custom if self.blocks.is_empty() => {
                    bail!("--mode custom needs --blocks")
                }
                SparsificationMode::Custom => Ok(SparsificationSpec::custom(self.blocks.iter().copied())),
            })
            .collect()
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory for reports and relative output files.
    #[arg(long, env = "BSPARSE_OUTPUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
