//! Scenario-driven command-line front end for the `retrosmooth` library.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use retrosmooth::smoothers::PriorKind;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "retrosmooth", version, about = "Filtering, retrofiltering and generalized quantum state smoothing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample measurement records and write them as JSON lines.
    Simulate(SimulateArgs),
    /// Smooth records from a file, or every record of the scenario, under each prior.
    Smooth(SmoothArgs),
    /// Average-entropy tables, bound checks and random extension sweeps.
    EntropyScan(EntropyScanArgs),
    /// Compare quantum smoothing of a diagonal scenario with classical smoothing.
    ClassicalLimit(ClassicalLimitArgs),
    /// Run the built-in property suite, optionally checking scenario files too.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory; defaults to the scenario's `out_dir` or the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Number of trajectories.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// JSON-lines record file as written by `simulate`.
    #[arg(long, conflicts_with = "enumerate", required_unless_present = "enumerate")]
    pub records: Option<PathBuf>,
    /// Smooth every record of the scenario, weighted by its probability.
    #[arg(long)]
    pub enumerate: bool,
    /// Comma-separated prior kinds; defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    pub prior: Option<Vec<PriorKind>>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).multiple(true).args(["scenario", "theorem1", "demo_svb"])))]
pub struct EntropyScanArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Random extension sweep checking the entropy ordering.
    #[arg(long)]
    pub theorem1: bool,
    /// Number of random scenarios in the sweep.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// The two-extension example whose entropy order depends on the measurement.
    #[arg(long)]
    pub demo_svb: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ClassicalLimitArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Additional scenario files whose instruments are checked.
    #[arg(long)]
    pub scenario: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Smooth(a) => commands::smooth::run(&a),
        Command::EntropyScan(a) => commands::entropy_scan::run(&a),
        Command::ClassicalLimit(a) => commands::classical_limit::run(&a),
        Command::Verify(a) => commands::verify::run(&a),
    }
}

/// Runs `f` on a pool of `jobs` worker threads (all cores when zero).
pub fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `--out`, else the scenario's `out_dir`, else the working directory.
pub fn resolve_out(common: &CommonArgs, scenario_dir: Option<&str>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| scenario_dir.map(PathBuf::from))
        .unwrap_or_else(|| Path::new(".").to_path_buf())
}
