//! Error type shared by the command layer.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    BinaryParse {
        path: PathBuf,
        #[source]
        source: graphmal_core::elf::ParseError,
    },

    #[error("resolving libraries for {path}: {source}")]
    Resolve {
        path: PathBuf,
        #[source]
        source: graphmal_core::elf::ResolveError,
    },

    #[error("{path}: {source}")]
    Recovery {
        path: PathBuf,
        #[source]
        source: graphmal_core::cfg::RecoveryError,
    },

    #[error("{path} line {line}: {message}")]
    FileFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Dataset {
        path: PathBuf,
        #[source]
        source: graphmal_core::format::FormatError,
    },

    #[error("sample {id}: {message}")]
    Sample { id: String, message: String },

    #[error("{0}")]
    Prep(#[from] graphmal_core::prep::PrepError),

    #[error("{0}")]
    Model(#[from] graphmal_core::model::ModelError),

    #[error("{0}")]
    Eval(#[from] graphmal_core::eval::EvalError),

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("checkpoint/dataset mismatch: {0}")]
    Mismatch(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("no samples could be processed")]
    AllSamplesFailed,
}
