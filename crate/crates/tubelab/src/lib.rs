//! Experiment harness: JSON configs in, sorted CSV rows and a JSON summary out.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, RunError};
pub use report::Report;
