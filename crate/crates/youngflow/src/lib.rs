//! File formats, experiment configs and reports around `youngflow-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod io;
pub mod report;

pub use config::{Check, DriverConfig, ExperimentConfig};
pub use error::{CliError, CliResult, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_PASS};
pub use experiment::{run_experiment, RunOutput};
pub use report::{CheckOutcome, Report, SCHEMA_VERSION};
