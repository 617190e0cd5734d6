//! Monte Carlo experiment harness: configuration, runners and result tables.

pub mod config;
pub mod metrics;
pub mod run;
pub mod sim;
pub mod table;

pub use config::{ExperimentKind, ExperimentSpec};
pub use run::{resolve_workers, run_experiment, run_with_workers, WORKERS_ENV};
pub use table::{manifest_toml, ResultTable};
