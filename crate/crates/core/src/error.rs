use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Domain`, `Precondition` and `Config` are validation failures (bad
/// parameters, violated operation preconditions); the rest are runtime
/// failures discovered mid-computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver instability at t={t}: |omega|_inf={linf:.3e} exceeds {bound:.3e}")]
    Instability { t: f64, linf: f64, bound: f64 },

    #[error("step size dt={dt:.3e} violates the CFL bound {bound:.3e}")]
    StepSize { dt: f64, bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconclusive result: {0}")]
    Inconclusive(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate bad user input rather than a runtime
    /// failure; the CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidField(_)
                | Error::Domain(_)
                | Error::Precondition(_)
                | Error::Config(_)
                | Error::Mismatch(_)
                | Error::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
