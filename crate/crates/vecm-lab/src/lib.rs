//! Library behind the `vecm-lab` binary: declarative run configuration,
//! the staged analysis pipeline, report rendering, and the expected-sign
//! comparison.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod signs;

pub use config::RunConfig;
pub use error::{CliError, ExitCode};
