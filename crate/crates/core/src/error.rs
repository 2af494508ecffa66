use std::path::PathBuf;

use thiserror::Error;

use crate::eval::EvalError;
use crate::motion::MotionError;
use crate::sim::SimError;
use crate::spectral::SpectralError;
use crate::worldmap::MapError;

/// Crate-wide error used by the pipeline and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
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
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short variant name, e.g. `MapMismatch`, printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Spectral(e) => e.name(),
            Error::Map(e) => e.name(),
            Error::Motion(e) => e.name(),
            Error::Sim(e) => e.name(),
            Error::Eval(e) => e.name(),
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => "NotFound",
            Error::Io { .. } => "Io",
            Error::Parse { .. } => "Parse",
            Error::Config(_) => "Config",
        }
    }

    /// True when the error stems from user input (files, flags, configs)
    /// rather than a failure inside a computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Config(_) | Error::Map(_) | Error::Sim(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
