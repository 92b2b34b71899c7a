//! Command-line pipeline around `replyset-core`: file formats, run
//! configuration, parallel corpus drivers and benchmarking.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod synthetic;

pub use error::{CliError, Result};
