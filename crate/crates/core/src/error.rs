use thiserror::Error;

/// Errors raised by the decomposition, forecasting and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A series has zero variance, so autocorrelations are undefined.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// `V2ᵀU1` is (numerically) singular and the stationary factors cannot be recovered.
    #[error("ill-conditioned factor recovery: smallest singular value {min_singular:e}")]
    IllConditioned {
        /// Smallest singular value of the matrix that had to be inverted.
        min_singular: f64,
    },

    /// A numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_argument(&self) -> bool {
        matches!(self, Error::Argument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
