//! Configuration, file formats and experiment pipelines for the `oscgate` command.

pub mod config;
pub mod matrix_csv;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use report::{OutputFormat, RunReport};
pub use run::{run_experiment, RunError};
