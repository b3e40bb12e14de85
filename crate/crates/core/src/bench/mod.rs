//! Weak and strong scaling sweeps across backends.
//!
//! Every cell runs the full halo check; a report never carries timings for
//! a run whose halos were wrong without saying so.

mod config;
mod report;
mod run;

use thiserror::Error;

pub use config::{parse_dims, BenchConfig, Mode};
pub use report::{compare_backends, delta_phrase, write_csv, BenchCell, BenchReport, CSV_HEADER};
pub use run::{halo_options, plan_for, run_benchmark, timestep_config, transport_for};

use crate::grid::GridError;
use crate::halo::PlanError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("comparison needs at least two backends, report has {0}")]
    TooFewBackends(usize),
}
