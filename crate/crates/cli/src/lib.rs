//! Command-line driver for the `craftlearn` library: configuration files,
//! CSV persistence of trajectories and control tapes, a scripted baseline
//! pilot, and metric reports.

pub mod baseline;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, Result};
