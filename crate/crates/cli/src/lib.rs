//! Command-line front end for the roughness bounds library.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, Output};
pub use config::{load_config, parse_config, Command, OutputFormat, Overrides, RunConfig};
pub use error::{CliError, Result};
