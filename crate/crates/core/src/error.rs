use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid cap exceeded: {nodes} nodes requested, cap is {cap}")]
    GridCapExceeded { nodes: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("eigendecomposition did not converge: {0}")]
    Convergence(String),

    #[error("empty spectral subspace below E = {energy}")]
    EmptySubspace { energy: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for configuration problems, 3 for
    /// numerical failures, 1 for everything else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) | Error::GridCapExceeded { .. } => 2,
            Error::ShapeMismatch { .. }
            | Error::Convergence(_)
            | Error::EmptySubspace { .. }
            | Error::Singular(_) => 3,
            Error::Io { .. } | Error::Serialization(_) => 1,
        }
    }
}
