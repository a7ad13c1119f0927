//! Filesystem, file-format, and command layer over `graphmal-core`: binary
//! loading, dependency resolution over search paths, corpus manifests, tag
//! dictionary and model checkpoint files, metric reports, and the
//! implementations of the CLI subcommands.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod dictfile;
pub mod error;
pub mod fsio;
pub mod report;

pub use config::{GraphSource, RunConfig};
pub use error::CliError;
