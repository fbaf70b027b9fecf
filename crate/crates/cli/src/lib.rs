//! Command-line front end: experiment execution (`run`), randomized property
//! suites (`verify`) and solver comparison (`bench`).
//!
//! Exit codes: 0 all checks pass, 1 invariant/certificate violation,
//! 2 configuration error, 3 numerical failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod bench;
pub mod config;
pub mod csvio;
pub mod runner;
pub mod verify_cmd;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Violation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hgopt",
    about = "Proximal first-order solvers for geodesically convex optimization on Hadamard manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Execute every (solver × seed) cell of an experiment config and write
    /// trace CSVs plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to config out_dir, then $HGOPT_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of concurrent grid cells.
        #[arg(long)]
        jobs: Option<usize>,
        /// Fill the wall_ms column (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Run randomized property suites; nonzero exit iff any invariant fails.
    Verify {
        /// Suites to run: quasilinear, geometry, convexity, rates, appendix.
        /// Empty means all.
        suites: Vec<String>,
        /// Same as listing suites positionally.
        #[arg(long = "suite")]
        suite_flags: Vec<String>,
        #[arg(long, default_value_t = verify_cmd::DEFAULT_SEED)]
        seed: u64,
        /// Shrink the randomized sweeps (smoke-test scale).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Compare at least two solvers on one experiment.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        timing: bool,
    },
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Run {
            config,
            out,
            seed,
            jobs,
            timing,
        } => runner::cmd_run(&runner::RunOptions {
            config,
            out,
            seed,
            jobs,
            timing,
        }),
        Command::Verify {
            suites,
            suite_flags,
            seed,
            samples,
        } => {
            let mut all = suites;
            all.extend(suite_flags);
            verify_cmd::cmd_verify(&verify_cmd::VerifyOptions {
                suites: all,
                seed,
                samples,
            })
        }
        Command::Bench {
            config,
            out,
            seed,
            jobs,
            timing,
        } => bench::cmd_bench(&runner::RunOptions {
            config,
            out,
            seed,
            jobs,
            timing,
        }),
    }
}

pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_contract() {
        assert_eq!(CliError::Violation("x".into()).exit_code(), 1);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
    }
}
