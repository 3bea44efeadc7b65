//! Configuration-driven runner for the `stadrag-core` simulator.
//!
//! [`runner`] turns an [`ExperimentConfig`] into in-memory CSV [`Table`]s and
//! [`output::write_tables`] writes them. The `stadrag` binary wraps both.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, SshMode};
pub use error::AppError;
pub use output::Table;
