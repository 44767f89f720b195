//! Experiment harness: configuration, seeded runners, and plotting.

pub mod config;
pub mod experiments;
pub mod plot;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, HarnessError, RunRecord};
pub use plot::{emit_plot, PlotError, PlotKind};
