use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("svd did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("rank-deficient input to {op}: singular value {index} is {value:e}")]
    RankDeficient {
        op: &'static str,
        index: usize,
        value: f64,
    },

    #[error("zero-norm vector: {0}")]
    ZeroNorm(String),

    #[error("invalid argument {arg}: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error("{0}")]
    Empty(String),

    #[error("objective is not finite at beta = {beta}")]
    NonFiniteObjective { beta: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Broad failure class; the command-line tool maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            arg,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument { .. } => ErrorClass::Usage,
            Error::Parse { .. } | Error::Data { .. } | Error::Empty(_) | Error::Io { .. } => {
                ErrorClass::Data
            }
            Error::ShapeMismatch { .. }
            | Error::NonFinite(_)
            | Error::SvdNoConvergence { .. }
            | Error::RankDeficient { .. }
            | Error::ZeroNorm(_)
            | Error::NonFiniteObjective { .. } => ErrorClass::Numerical,
        }
    }
}
