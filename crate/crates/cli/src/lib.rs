//! Experiment runner for `hwsn-core`: JSON configs, figure presets, CSV and
//! plot-data output.

pub mod config;
pub mod plotdata;
pub mod presets;
pub mod runner;

pub use config::ExperimentConfig;
pub use runner::{run_experiment, RunOutput};
