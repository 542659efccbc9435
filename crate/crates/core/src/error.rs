use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Register sizes, array shape or operator dimensions do not fit together.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numeric argument is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input does not satisfy a procedure's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The simulator detected a broken internal invariant (norm drift, etc.).
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code for the CLI: 3 for invariant violations, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
