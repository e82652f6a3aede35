//! Library behind the `windbench` command: run configuration, the evaluation
//! pipeline, report tables and charts.

pub mod checks;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod regress;
pub mod report;
pub mod synth;
pub mod tables;
pub mod threads;

pub use config::RunConfig;
pub use error::{CliError, Result};
