//! Experiment harness for the channel estimator: seeded simulation of
//! single- and multi-channel experiments, CSV/JSON output, and the
//! `chan-em` command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::{ExperimentConfig, GridSpec, Preset};
pub use error::{HarnessError, Result};
pub use experiment::{run_command, Command, Outcome, RunOptions};
