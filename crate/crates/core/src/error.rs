use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric error in {term} term at point {index}: {detail}")]
    Numeric {
        term: &'static str,
        index: usize,
        detail: String,
    },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("problem `{0}` has no exact solution")]
    NoExactSolution(String),

    #[error("degenerate reference: sum of squared exact values is zero")]
    DegenerateReference,

    #[error("expression error: {0}")]
    Expr(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error's category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownProblem(_) | Error::Expr(_) | Error::InvalidArgument(_) => 2,
            Error::Io { .. } | Error::Checkpoint(_) => 3,
            Error::Numeric { .. } | Error::DegenerateReference => 4,
            Error::Geometry(_) => 5,
            Error::Shape { .. } | Error::NoExactSolution(_) => 6,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
