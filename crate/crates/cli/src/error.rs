use thiserror::Error;

/// CLI failures, each mapped to a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("{0} assertion(s) failed")]
    Assertion(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Io(_) => 3,
        }
    }
}

impl From<quadgrad::Error> for CliError {
    fn from(e: quadgrad::Error) -> Self {
        match e {
            quadgrad::Error::Input(_) | quadgrad::Error::Shape { .. } => CliError::Validation(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
