//! Command-line front end: config parsing, unit conversion and CSV/JSON
//! export around `btspec-core`.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{load, RunConfig, Shape, OUT_DIR_ENV};
pub use error::{CliError, Result};
