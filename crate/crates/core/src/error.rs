use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants line up with the CLI exit codes: input errors map to 2,
/// numerical failures to 3 and exhausted budgets to 4.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{phase} failed: {detail}")]
    Phase { phase: String, detail: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn phase(phase: impl Into<String>, detail: impl ToString) -> Self {
        Error::Phase {
            phase: phase.into(),
            detail: detail.to_string(),
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Io(_) => 2,
            Error::Degenerate(_) | Error::Numerical(_) => 3,
            Error::Budget(_) => 4,
            Error::Phase { .. } => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
