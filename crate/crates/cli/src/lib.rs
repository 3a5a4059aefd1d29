//! Library side of the `uwnet` command: each subcommand is a function from a
//! [`RunConfig`] to a serialisable report, so tests can drive them without
//! spawning a process.

pub mod bench;
pub mod config;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod report;
pub mod train;

pub use config::{Format, RunConfig};
pub use error::{CliError, Outcome};
