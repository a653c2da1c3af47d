use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid PDE coefficients, grid layout or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear or nonlinear solve failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit code for the CLI: validation problems exit 2, numerical
    /// failures exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Io(_) | Error::Format(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}
