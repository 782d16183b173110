use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("patch {index} blew up at t = {time}")]
    PatchBlowUp { index: usize, time: f64 },
    #[error("patch {index} failed numerically at t = {time}")]
    PatchFailure { index: usize, time: f64 },
    #[error("time {t} outside the validity horizon {horizon}")]
    OutOfValidity { t: f64, horizon: f64 },
    #[error("malformed data: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
