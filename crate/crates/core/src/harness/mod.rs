//! Command-line experiment harness: configuration, commands and writers.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, CommandOutput};
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat, Overrides};
