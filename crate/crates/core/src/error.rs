use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown measurement basis `{0}` (expected Z, X0, X1, X2, X3 or a configured custom basis)")]
    UnknownBasis(String),

    #[error("grouping {0:?} is not a permutation of (0, 1, 2, 3)")]
    BadGrouping([usize; 4]),

    #[error("cannot estimate a distribution: {0}")]
    Estimation(String),

    #[error("series too short for a spectrum: {len} samples, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("{path}: line {line}: {message}")]
    Table {
        path: String,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to serialize output: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// Configuration problems exit with 2, problems with input data or with
    /// estimation on that data exit with 3, anything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::UnknownBasis(_)
            | Error::InvalidParameter { .. }
            | Error::NonUnitary { .. }
            | Error::BadGrouping(_) => 2,
            Error::Table { .. }
            | Error::Estimation(_)
            | Error::InvalidState(_)
            | Error::SeriesTooShort { .. } => 3,
            Error::Io { .. } | Error::Serialize(_) => 1,
        }
    }
}
