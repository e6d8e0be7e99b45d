//! File formats, run manifests and the `ghostimg` command line on top of
//! `ghostimg-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pgm;
pub mod tables;

pub use error::{CliError, Result};
