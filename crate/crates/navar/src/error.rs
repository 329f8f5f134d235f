//! Errors for file formats, checkpoints, and the CLI.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum NavarError {
    #[error(transparent)]
    Core(#[from] navar_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("version error in {path}: {msg}")]
    Version { path: PathBuf, msg: String },

    #[error("unknown preset `{0}` (run `navar preset --list`)")]
    UnknownPreset(String),

    #[error("{0}")]
    Usage(String),
}

impl NavarError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NavarError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        NavarError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn version(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        NavarError::Version {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, NavarError>;
