//! Experiment runner behind the `pal` command-line tool: single runs,
//! optimizer comparisons, hyperparameter grids and diagnostics, all seeded
//! and written as CSV.

pub mod commands;
pub mod config;
pub mod grid;
pub mod output;
pub mod run;

use thiserror::Error;

pub use config::{ConfigFile, ExperimentConfig, OptimizerKind, ProblemKind};
pub use grid::{grid_search, GridRow, GridTable};
pub use run::{run_experiment, run_seed, run_traces, ProfileRow, RunRecord, SeedTrace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Optim(#[from] crate::Error),
}
