//! Experiment runner: JSON configuration in, CSV table out.

pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use run::{run_experiment, Experiment, RunError};
pub use table::ResultTable;
