//! Config-driven experiment runner behind the `fedmoo` binary.
//!
//! Subcommands map onto the public functions here:
//!
//! - `run <config.json>` → [`run_experiment`]: the λ × seed sweep with
//!   per-cell trace/eval artifacts and a summary CSV;
//! - `check-bounds <config.json>` → [`run_check_bounds`]: Monte-Carlo
//!   checks of the rate and drift bounds per λ, JSON reports;
//! - `pareto <config.json>` → [`run_pareto`]: grid front oracle and
//!   weak-Pareto certificates of the scalarized minimizers;
//! - `parse-idx <file>` → [`parse_idx_dump`]: IDX header dump.
//!
//! Exit codes: 0 completed (divergent cells are recorded, not fatal),
//! 2 config error, 3 I/O error.

mod artifacts;
pub mod config;
mod runner;

use thiserror::Error;

pub use artifacts::{config_hash, fmt_f64};
pub use config::{validate_config, ExperimentConfig, InstanceConfig, PartitionConfig};
pub use runner::{
    parse_idx_dump, run_check_bounds, run_experiment, run_pareto, CellOutcome, CellStatus,
    Overrides, ParetoOutcome, SweepSummary,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
