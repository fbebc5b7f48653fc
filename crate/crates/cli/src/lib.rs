//! Command-line front end: config handling and subcommand bodies, kept in a
//! library so integration tests can drive them without spawning processes.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Mode, RunConfig};
pub use error::CliError;
