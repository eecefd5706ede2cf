use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, TfmError>;

impl TfmError {
    pub fn is_config(&self) -> bool {
        matches!(self, TfmError::Config(_) | TfmError::Domain(_) | TfmError::OutOfRange(_))
    }
}
