//! `psdrank`: command-line front end for psd-rank computations.
//!
//! Every verb reads JSON (or CSV matrices with `--format csv`) from `--in` or
//! stdin and writes JSON to `--out` or stdout. Exit codes: 0 success, Yes or
//! pass; 1 No or fail; 2 undetermined or not found; 3 input error.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "psdrank",
    version,
    about = "Psd rank of nonnegative matrices and polytopes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Opts {
    /// Input file; stdin when absent or "-".
    #[arg(long = "in", global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Factorization size.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Tolerance relative to the largest matrix entry.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// Worker threads for restarts; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Slack matrix of {"P": vertices, "Q": inequalities}; Q defaults to P's facets.
    Slack,
    /// Nested polygon pair of a rank-3 nonnegative matrix.
    Pair,
    /// The 4x4 matrix M_eps.
    Mexample,
    /// Canonical form, octahedron lift and biplanarity of a hexagon.
    Hexlift,
    /// Adds a facet a0 + a.x >= 0 to a lift: {"lift", "a0", "a"}.
    Augment,
    /// Numeric search for a size-k psd factorization.
    Factorize,
    /// Psd factorization of size at most 4 ceil(min(p,q)/6) of a rank-3 matrix.
    Rank3fact,
    /// Checks a factorization and/or certificate against its "matrix".
    Verify,
    /// Exact decision of psd rank 2 for a rank-3 matrix.
    Decide2,
    /// Is the psd rank of a rank k(k+1)/2 matrix equal to k?
    Minrank,
    /// Lower and upper psd-rank bounds.
    Bounds {
        /// Also run the rank-2 decision and factorization searches.
        #[arg(long)]
        full: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PSDRANK_LOG", "warn")).init();
    let cli = Cli::parse();
    ExitCode::from(commands::run(&cli))
}
