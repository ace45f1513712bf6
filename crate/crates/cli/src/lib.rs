//! Configuration parsing, command dispatch and CSV output for `slowpol`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Report};
pub use config::{parse_config, Carrier, Command, RunConfig};
pub use error::CliError;
