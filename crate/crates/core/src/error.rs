use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Optimizer trace entry: unconstrained parameter vector and log-likelihood.
pub type TracePoint = (Vec<f64>, f64);

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("numerical failure on day {day}: {detail}")]
    NumericalFailure { day: usize, detail: String },

    #[error("initialization error: {0}")]
    Initialization(String),

    #[error("optimizer failed: {message} ({} trace points)", trace.len())]
    OptimizerFailure {
        message: String,
        trace: Vec<TracePoint>,
    },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("vintage {vintage}: {source}")]
    Vintage {
        vintage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure { .. }
            | Error::Initialization(_)
            | Error::OptimizerFailure { .. }
            | Error::ZeroVariance(_) => true,
            Error::Vintage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: path.into(),
            line,
            message: message.into(),
        }
    }
}
