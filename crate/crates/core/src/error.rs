use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("under-resolved quadrature: {0}")]
    Resolution(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },
    #[error("grid guard: {cells} cells exceeds limit {limit}")]
    GridGuard { cells: u64, limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn pre<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
