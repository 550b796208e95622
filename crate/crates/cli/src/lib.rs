//! Experiment harness behind the `hessketch` binary: configuration parsing,
//! problem construction, solver runs and file output.

pub mod config;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use run::{RunError, SweepParam};
