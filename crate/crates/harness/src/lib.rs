//! Experiment orchestration for the `mta` command-line tool: configuration,
//! replica-parallel runs, aggregation and CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod stats;

pub use config::{ExperimentConfig, Mode, PointerQubits};
pub use error::{HarnessError, Result};
pub use experiments::{run, ExperimentReport};
