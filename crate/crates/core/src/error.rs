use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (mismatched
    /// spaces, foreign base points, negative scalings, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A geodesic or its continuation is not uniquely determined.
    #[error("ambiguous geodesic: {0}")]
    Ambiguous(String),

    /// Malformed input data or configuration.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The inductive mean iteration failed its Cauchy tail test.
    #[error("Fréchet mean iteration did not settle: tail spread {spread:.3e} exceeds {tolerance:.3e}")]
    NonConvergence {
        spread: f64,
        tolerance: f64,
        /// Coordinates of the last few iterates.
        tail: Vec<Vec<f64>>,
    },

    /// The measure failed one of the localization checks.
    #[error("measure is not localized: {0}")]
    NotLocalized(String),

    /// A numerical invariant was violated beyond tolerance.
    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
