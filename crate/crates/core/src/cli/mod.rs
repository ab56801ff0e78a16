//! Command-line front end.
//!
//! Exit codes: `0` success, `1` usage or configuration error, `2` sum rule
//! fails, `3` winding and oracle counts disagree.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{EXIT_OK, EXIT_ORACLE, EXIT_SUM_RULE, EXIT_USAGE};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-scales",
    version,
    about = "Count positive eigenvalues of radial Schrödinger operators with two-scale potentials",
    long_about = "Counts and locates the positive eigenvalues of Δ − W with W = V0 + ε² V1(ε r) by \
                  winding compactified Prüfer-angle flows, and cross-checks every count with a \
                  finite-difference Sturm-sequence oracle.\n\n\
                  Config defaults: epsilon 0.1, alpha -0.45, operator \"full\", eigen_floor 1e-6, \
                  mu_grid {lo 0, hi 1.25·sup(V1-), n 512}, tolerances {rtol 1e-10, atol 1e-12, \
                  h_init 1e-3, h_max 50, max_steps 2000000}, manifold {seed_offset 1e-6, \
                  center_offset 1e-6, tail_tol 1e-12, paranoid false}, oracle {enabled true, \
                  n 4000, r 200 (400 for v1_only), top_k 8}.\n\n\
                  Exit codes: 0 success, 1 usage/config error, 2 sum rule fails, 3 oracle disagrees."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a built-in scenario: counts, gap and O(1) eigenvalues, oracle
    /// check, matching curve and manifold CSVs.
    Scenario {
        /// Scenario id (1, 2 or 3).
        #[arg(long)]
        id: u8,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Threshold exponent, in (-1/2, 0).
        #[arg(long, default_value_t = -0.45, allow_hyphen_values = true)]
        alpha: f64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Number of μ values in (0, 1) for the manifold CSVs.
        #[arg(long, default_value_t = 8)]
        figure_points: usize,
        /// Re-run each manifold with halved seed offsets and fail on drift.
        #[arg(long)]
        paranoid: bool,
    },
    /// Winding count of one operator, checked against the oracle.
    Count {
        #[arg(long)]
        config: PathBuf,
    },
    /// Matching function Σ^k over the μ grid (CSV) and its zeros.
    Match {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-difference counts and eigenvalues.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Audit the decay hypotheses of both potentials (advisory).
    DecayCheck {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(RunConfig::from_json(&text)?)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Scenario { id, epsilon, alpha, out, figure_points, paranoid } => {
            commands::cmd_scenario(*id, *epsilon, *alpha, out, *figure_points, *paranoid)
        }
        Command::Count { config } => load(config).and_then(|c| commands::cmd_count(&c)),
        Command::Match { config } => load(config).and_then(|c| commands::cmd_match(&c)),
        Command::Oracle { config } => load(config).and_then(|c| commands::cmd_oracle(&c)),
        Command::DecayCheck { config } => load(config).and_then(|c| commands::cmd_decay_check(&c)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
