//! Batch front-end: experiment configs, the task runner and plot data.

pub mod config;
pub mod plots;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, GridConfig, Task};
pub use plots::{emit_plot_data, result_files, PlotReport};
pub use runner::{run, verify_manifest, RunError, RunSummary};
