use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid index {index} out of range (last index {last})")]
    IndexOutOfRange { index: usize, last: usize },

    #[error("coordinate {coord} out of range for dimension {dim}")]
    CoordinateOutOfRange { coord: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functional `{id}` is singular at grid index {k}: distance {distance:e} to the singular point")]
    Singular { id: String, k: usize, distance: f64 },

    #[error("non-finite value {value} while {context}")]
    NonFinite { context: String, value: f64 },

    #[error("no room for a forward time step at grid index {k} (t = {t}, h = {h}, T = {horizon})")]
    NoForwardRoom { k: usize, t: f64, h: f64, horizon: f64 },

    #[error("functional `{0}` does not support evaluation at off-grid times")]
    HorizontalUnsupported(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("invalid theta rule `{rule}`: {reason}")]
    InvalidThetaRule { rule: String, reason: String },

    #[error("scenario {scenario}: {source}")]
    InScenario {
        scenario: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed path file: {0}")]
    PathFormat(String),

    #[error("output directory {0} already exists; pass --force to overwrite")]
    OutputExists(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub(crate) fn in_scenario(self, scenario: usize) -> Self {
        Error::InScenario {
            scenario,
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidGrid(_)
            | Error::IndexOutOfRange { .. }
            | Error::CoordinateOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::HorizontalUnsupported(_)
            | Error::UnknownFunctional(_)
            | Error::InvalidThetaRule { .. }
            | Error::Config(_) => ErrorKind::Config,
            Error::Singular { .. } | Error::NonFinite { .. } | Error::NoForwardRoom { .. } => {
                ErrorKind::Numerical
            }
            Error::InScenario { source, .. } => source.kind(),
            Error::PathFormat(_) | Error::Csv(_) => ErrorKind::Io,
            Error::OutputExists(_) | Error::Io(_) => ErrorKind::Io,
            Error::Json(e) if e.is_io() => ErrorKind::Io,
            Error::Json(_) => ErrorKind::Config,
        }
    }
}
