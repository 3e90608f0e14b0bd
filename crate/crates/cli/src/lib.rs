//! Library side of the `xdesign` tool: configuration, subcommands and
//! output files. The binary only parses flags and maps errors to exit codes.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
