//! Experiment harness: environment and stream generators, the approximation and bandit
//! experiment drivers, and CSV metrics output.

pub mod config;
pub mod data;
pub mod env;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{ApproxConfig, ExperimentConfig, ExperimentKind, PolicySpec, StreamKind};
pub use error::{HarnessError, Result};
pub use experiment::{run_approx_experiment, run_bandit_experiment, run_experiment};
pub use output::{emit_csv, MetricsTable};
