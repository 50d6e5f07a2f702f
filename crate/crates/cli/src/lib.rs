//! Command-line front end for fairness-aware feature selection: config
//! parsing, the subcommands, and their CSV, JSON and SVG outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, Result};
