use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frame is not transversal to the torus (<X,X0> = 0)")]
    NonTransversal,
    #[error("frame determinant {0} differs from 1")]
    NotUnimodular(f64),
    #[error("degenerate frame: |c·i + d| underflows")]
    DegenerateFrame,
    #[error("ladder function label {found:?} does not match distribution label {expected:?}")]
    LabelMismatch { expected: (i64, i64), found: (i64, i64) },
    #[error("grid of {q} points cannot separate the frequencies (need more than {required})")]
    GridTooCoarse { q: usize, required: usize },
    #[error("grid overflow: {0}")]
    GridOverflow(String),
    #[error("only {found} grid points fall in the fittable band (need {needed})")]
    InsufficientSamples { found: usize, needed: usize },
    #[error("complex extension leaves the budgeted domain: {0}")]
    DomainExceeded(String),
    #[error("function does not look analytic on the disc: {0}")]
    NonAnalytic(String),
    #[error("time change is not positive (min alpha = {0})")]
    NonPositiveAlpha(f64),
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for errors raised by a numerical guard rather than by bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::DomainExceeded(_)
                | Error::NonAnalytic(_)
                | Error::NonPositiveAlpha(_)
                | Error::InsufficientSignal(_)
                | Error::InsufficientSamples { .. }
                | Error::GridOverflow(_)
                | Error::GridTooCoarse { .. }
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
