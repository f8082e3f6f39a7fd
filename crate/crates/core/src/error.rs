use thiserror::Error;

/// Errors raised by the scattering and reconstruction routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A function was evaluated outside of its domain (coincident points, `x <= 0`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A curve is not resolved by the requested number of samples.
    #[error("bandwidth error: {0}")]
    Bandwidth(String),

    /// A geometric precondition failed, e.g. a filtered curve intersects itself.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Mismatched sizes or inconsistent inputs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Factorization breakdown or a solve that did not meet its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The damped Newton step could not produce an acceptable curve.
    #[error("step failure: {0}")]
    StepFailure(String),

    /// Invalid configuration or missing data.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Bandwidth(_) => "bandwidth",
            Error::Geometry(_) => "geometry",
            Error::Dimension(_) => "dimension",
            Error::Numerical(_) => "numerical",
            Error::StepFailure(_) => "step_failure",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
