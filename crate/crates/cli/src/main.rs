//! `bifractal` command-line tool.
//!
//! Exit codes: 0 ok, 1 configuration or parse error, 2 invalid model,
//! 3 numerical failure, 4 degenerate data.

mod commands;
mod config;
mod exit;
mod figures;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use bifractal::EstimatorKind;
use clap::{Parser, Subcommand};

use crate::exit::CliError;

#[derive(Parser)]
#[command(
    name = "bifractal",
    version,
    about = "Joint fractal-index estimation for bivariate Gaussian processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check model validity and report the local expansion and dimension.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate one path and write it as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate both fractal indices from a path CSV.
    Estimate {
        path: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "gls")]
        kind: EstimatorKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit covariance of the estimators and convergence-rate exponents.
    Asymptotics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        kind: Option<EstimatorKind>,
        /// Grid size used to build GLS weights.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo experiment over a list of grid sizes.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run a single grid size instead of the configured list.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        kind: Option<EstimatorKind>,
        #[arg(long)]
        reps: Option<usize>,
        /// Print the planned (n, R, seed) table and stop.
        #[arg(long)]
        dry_run: bool,
        /// 1000 replicates on n = 200, 210, ..., 1000. Takes hours.
        #[arg(long)]
        full_scale: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Simulate {
            config,
            n,
            seed,
            out,
        } => commands::simulate(&config, n, seed, out.as_deref()).map(|_| ()),
        Command::Estimate { path, m, kind, out } => {
            commands::estimate(&path, m, kind, out.as_deref())
        }
        Command::Asymptotics {
            config,
            m,
            kind,
            n,
            out,
        } => commands::asymptotics(commands::AsymptoticsArgs {
            config: &config,
            m,
            kind,
            n,
            out: out.as_deref(),
        })
        .map(|_| ()),
        Command::Experiment {
            config,
            out,
            seed,
            n,
            m,
            kind,
            reps,
            dry_run,
            full_scale,
        } => commands::experiment(commands::ExperimentArgs {
            config: &config,
            out: out.as_deref(),
            seed,
            n,
            m,
            kind,
            reps,
            dry_run,
            full_scale,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage errors would exit 2, which is reserved here.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
