//! `multisym`: Legendre tables, lattice evolution, structural checks, the
//! λ-scaling study and the acceptance suite.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! or configuration errors. `MULTISYM_THREADS` caps the worker pool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use multisym::checks::CheckError;
use multisym::dynamics::DynamicsError;
use multisym::perturbation::PerturbationError;

#[derive(Debug, Parser)]
#[command(name = "multisym", version, about = "Multisymplectic field theory checks and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Newton-computed Lepage Hamiltonians against their closed forms (CSV).
    Legendre(LegendreArgs),
    /// Evolve the φ³ field and write φ, p, e per time slice (CSV + JSON sidecar).
    Evolve(EvolveArgs),
    /// Run one structural check and print a JSON report.
    Verify(VerifyArgs),
    /// The λ-scaling study of the first and second order functionals.
    Perturb(PerturbArgs),
    /// Every acceptance criterion, with a consolidated JSON report.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
struct LegendreArgs {
    /// trivial, harmonic, maxwell or all.
    #[arg(long, default_value = "all")]
    lagrangian: String,
    /// Random points per Lagrangian.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[arg(long, default_value_t = 128)]
    nx: usize,
    #[arg(long, default_value_t = 201)]
    nt: usize,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// plane-wave, gaussian or noise:SEED.
    #[arg(long, default_value = "gaussian")]
    init: String,
    /// Saved sidecar to re-run; replaces every other parameter.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// flow, dynrel, pairwise, bracket or observable.
    #[arg(long)]
    check: String,
    /// JSON configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[arg(long, default_value_t = 1e-3)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    lambda_max: f64,
    #[arg(long, default_value_t = 8)]
    n_lambda: usize,
    #[arg(long, default_value_t = 64)]
    nx: usize,
    #[arg(long, default_value_t = 128)]
    nt: usize,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// First-order weight: plane:K or gaussian.
    #[arg(long, default_value = "gaussian")]
    phi1: String,
    /// Initial data of the interacting field: plane-wave, gaussian or noise:SEED.
    #[arg(long, default_value = "gaussian")]
    init: String,
    /// Time of the first row inside the slab [default: 4 dt].
    #[arg(long)]
    t0: Option<f64>,
    /// Time of the last row inside the slab [default: (Nt − 8) dt].
    #[arg(long)]
    t1: Option<f64>,
    /// Saved verdict or configuration to re-run; replaces every other parameter.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; the verdict also goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Reduced grids; tolerances unchanged.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Consolidated JSON report destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
}

/// What a command concluded; errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

fn run(argv: impl IntoIterator<Item = String>) -> ExitCode {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = multisym::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Legendre(a) => commands::legendre(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::Suite(a) => commands::suite(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    run(std::env::args())
}
