//! File formats, audio IO, reports and the `curate` command-line driver
//! around [`curate_core`].

pub mod audio;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod sidecar_io;
pub mod snapshot_io;

pub use error::{CliError, CliResult};
