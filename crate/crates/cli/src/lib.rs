//! Library behind the `frgnn` binary: configuration, run directories and
//! the experiment commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod svg;
pub mod theory;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
