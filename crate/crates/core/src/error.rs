use thiserror::Error;

/// Errors produced by the summation and Stokes-analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function was evaluated exactly at (or numerically on top of) one of its singular points.
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    /// The integration ray passes through a singularity of the integrand.
    #[error("integrand is singular on the ray in direction {direction} near |s| = {modulus:.6e}")]
    SingularRay { direction: f64, modulus: f64 },

    /// A numerical procedure could not reach the requested accuracy.
    #[error("accuracy error in {context}: achieved {achieved:.3e}, requested {requested:.3e}")]
    Accuracy {
        context: String,
        achieved: f64,
        requested: f64,
    },

    /// Invalid input data (malformed problem description, bad parameters).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn accuracy(context: impl Into<String>, achieved: f64, requested: f64) -> Self {
        Error::Accuracy {
            context: context.into(),
            achieved,
            requested,
        }
    }

    /// True for failures caused by numerics rather than by the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Accuracy { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
