//! Experiment runner: configs, runners, artifact output and self-checks.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod presets;
pub mod verify;

pub use config::Config;
pub use error::CliError;
pub use experiments::{CsvFile, ExperimentId};
