use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integration failure at x = {x}: {reason}")]
    Integration { x: f64, reason: String },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
