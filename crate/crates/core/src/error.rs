use thiserror::Error;

use crate::geometry::SpaceKind;

/// Errors raised by geometry, prox, splitting and diagnostics routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space mismatch: expected {expected:?}, found {found:?}")]
    SpaceMismatch {
        expected: SpaceKind,
        found: SpaceKind,
    },

    #[error("sphere point is not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("matrix is not symmetric (max asymmetry = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue = {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("antipodal sphere points (distance = {distance}); geodesic is not unique")]
    Antipodal { distance: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::OutOfRange { name, value, range }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn is_io_error(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_io_error(),
            Error::Io(_) => true,
            _ => false,
        }
    }

    /// True for errors caused by invalid user input rather than numerical failure.
    pub fn is_config_error(&self) -> bool {
        if let Error::Context { source, .. } = self {
            return source.is_config_error();
        }
        matches!(
            self,
            Error::Config(_)
                | Error::OutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::SpaceMismatch { .. }
                | Error::NotUnitNorm { .. }
                | Error::NotSymmetric { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Empty(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
