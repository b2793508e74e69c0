//! `exportlearn`: batch driver for simulation, estimation, inference,
//! baselines and report rendering.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 input validation,
//! 4 estimation did not converge, 5 I/O.

mod commands;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use exportlearn_core::panel::{ExposureMeasure, ExposureMode, PeerPool};

#[derive(Debug, Parser)]
#[command(name = "exportlearn", version, about = "Learning-by-exporting and learning-from-exporters estimation")]
struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, global = true, env = "EXPORTLEARN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a panel from a DGP config; writes panel.csv and truth.csv.
    Simulate(SimulateArgs),
    /// Fit both stages and write estimates.json, effects.csv and omega.csv.
    Estimate(EstimateArgs),
    /// Estimate, then add wild-bootstrap BCa intervals and significance shares.
    Bootstrap(BootstrapArgs),
    /// Exporter premia, dominance test, two-step comparator and grand-average algebra.
    Baseline(BaselineArgs),
    /// Render text tables and the two-step CSV from one or more run directories.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// DGP config (TOML, flat keys); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of firms.
    #[arg(long)]
    n_firms: Option<usize>,
    /// Observed years per firm.
    #[arg(long)]
    periods: Option<usize>,
    /// Output directory (default runs/run-<unix seconds>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
struct InputArgs {
    /// Panel CSV with columns firm_id, year, Y, K, L, M, X, region, industry[, rel_price].
    #[arg(long, short)]
    input: PathBuf,
    /// Run config (TOML, flat keys); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exposure average: peer (excludes the firm) or grand (includes it).
    #[arg(long)]
    mode: Option<ExposureMode>,
    /// Exposure measure: intensity or status.
    #[arg(long)]
    measure: Option<ExposureMeasure>,
    /// Peer pool: region-industry or industry-only.
    #[arg(long)]
    pool: Option<PeerPool>,
    /// Region dummies in the productivity law.
    #[arg(long)]
    fe_region: bool,
    /// Industry dummies in the productivity law.
    #[arg(long)]
    fe_industry: bool,
    /// Drop rows failing validation instead of aborting.
    #[arg(long)]
    drop_invalid_rows: bool,
    /// Write the row validation report (JSON) here.
    #[arg(long)]
    validation_report: Option<PathBuf>,
    /// Run directory (default runs/run-<unix seconds>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Bootstrap replicates.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    bootstrap: Option<u64>,
    /// Seed of the bootstrap weights.
    #[arg(long)]
    seed: Option<u64>,
    /// Firms per jackknife block.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jackknife_delete: Option<u64>,
    /// Confidence level of the intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Include row-level LBE/LFE replicates in bootstrap.csv.
    #[arg(long)]
    audit_rows: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Seed of the dominance subsampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Dominance subsamples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    subsamples: Option<u64>,
    /// Firms per dominance subsample (default floor(n_firms^0.7)).
    #[arg(long)]
    subsample_firms: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Run directories; the first supplies the main tables, all of them
    /// enter the specification comparison.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Where report.txt and two_step.csv go (default: the first run).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Report(a) => report::run(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use exportlearn_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } => 5,
                E::Csv(_)
                | E::Schema(_)
                | E::Validation(_)
                | E::Config(_)
                | E::InvalidInput(_)
                | E::EmptySample => 3,
                E::NoConvergence | E::AllBoundary | E::RankCollapse { .. } | E::TooManyFailures { .. } => 4,
                _ => 1,
            };
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 5;
        }
    }
    1
}
