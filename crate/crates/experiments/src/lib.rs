//! Reproducible experiments for robust data-driven tracking: configuration,
//! the end-to-end pipeline and its file outputs.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{ExperimentConfig, Reference, Seeds, SolverConfig, SystemSource};
pub use output::emit_plots;
pub use pipeline::{run_experiment, ExperimentError, ExperimentReport, Stage};
