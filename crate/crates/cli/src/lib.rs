//! Command-line front end for the hourly forecasting benchmark: run
//! configuration, CSV input, the 7-family benchmark, saved models and plot
//! data.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, CliResult};
