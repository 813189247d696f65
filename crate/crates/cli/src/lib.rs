//! Command-line front end for the `saddlepoint` solvers.
//!
//! Exit codes: 0 success or certified, 1 structural error (bad arguments,
//! unreadable or malformed files), 2 solver non-convergence, 3 certificate
//! or oracle failure.

// `!(a <= b)` is used on purpose: it is true when either side is NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod error;
pub mod files;

pub use commands::TOL_ENV;
pub use error::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(name = "saddlepoint", version, about = "Certified entropy and transport solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize an integral functional under moment constraints.
    SolveEntropy(SolveEntropyArgs),
    /// Solve a discrete optimal transport problem.
    SolveOt(SolveOtArgs),
    /// Evaluate a gauge, the support function of its level set, or the sandwich estimate.
    Gauge(GaugeArgs),
    /// Recompute the certificate of a solution file.
    Certify(CertifyArgs),
    /// Write a seeded random problem file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Format {
    Json,
    /// JSON to `--out` (when given) and a flat table to stdout.
    Csv,
}

#[derive(Debug, Args)]
pub(crate) struct SolveEntropyArgs {
    pub problem: PathBuf,
    /// Certificate tolerance; overrides SADDLEPOINT_TOL.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Cross-check against the grid oracle (supports of at most 4 points).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub(crate) struct SolveOtArgs {
    pub problem: PathBuf,
    /// Certificate tolerance; overrides SADDLEPOINT_TOL.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cross-check against vertex enumeration (at most 4 sources and sinks).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum GaugeOp {
    Gauge,
    Support,
    Sandwich,
}

impl GaugeOp {
    pub fn name(self) -> &'static str {
        match self {
            GaugeOp::Gauge => "gauge",
            GaugeOp::Support => "support",
            GaugeOp::Sandwich => "sandwich",
        }
    }
}

#[derive(Debug, Args)]
pub(crate) struct GaugeArgs {
    pub spec: PathBuf,
    #[arg(long, value_enum)]
    pub op: GaugeOp,
    /// Comma-separated coordinates, e.g. "1,-0.5".
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Debug, Args)]
pub(crate) struct CertifyArgs {
    pub problem: PathBuf,
    pub solution: PathBuf,
    /// Overrides SADDLEPOINT_TOL and the tolerances recorded in the solution.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum GenKind {
    Entropy,
    Ot,
}

#[derive(Debug, Args)]
pub(crate) struct GenArgs {
    pub kind: GenKind,
    #[arg(long)]
    pub seed: u64,
    /// `N` or `NxK` points by features for entropy (K defaults to 3),
    /// `M` or `MxN` for transport.
    #[arg(long)]
    pub size: String,
    /// Box constraint around the sampled moments instead of an equality.
    #[arg(long = "box")]
    pub boxed: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Exit::Success,
                _ => Exit::Structural,
            };
            let _ = e.print();
            return code.code();
        }
    };
    let result = match &cli.command {
        Command::SolveEntropy(a) => commands::solve_entropy(a),
        Command::SolveOt(a) => commands::solve_transport(a),
        Command::Gauge(a) => commands::gauge_command(a),
        Command::Certify(a) => commands::certify(a),
        Command::Gen(a) => commands::generate(a),
    };
    match result {
        Ok(exit) => exit.code(),
        Err(e) => {
            eprintln!("saddlepoint: error: {e}");
            Exit::Structural.code()
        }
    }
}
