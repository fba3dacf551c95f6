//! Harness around `zsc-core`: dataset and model files, JSON experiment
//! configs, and the seeded parallel runner behind the `zscbench` CLI.

pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::{ExperimentConfig, SynthConfig};
pub use error::{BenchError, Result};
pub use runner::{run_ensemble, run_synth, run_variability, EnsembleReport, VariabilityReport};
