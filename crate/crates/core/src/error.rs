use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("cannot assign unique pilot-hopping codes: {users} users but only {available} sequences")]
    InfeasibleCodes { users: usize, available: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InfeasibleCodes { .. } | Error::InvalidRegularizer(_) => 2,
            Error::Json(_) => 2,
            Error::DegenerateGeometry(_)
            | Error::DimensionMismatch(_)
            | Error::NonFinite(_)
            | Error::Numerical(_) => 3,
            Error::Io { .. } => 1,
        }
    }
}
