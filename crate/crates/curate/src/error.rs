use std::process::ExitCode;

/// Command failure, split by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or missing inputs. Exit code 1.
    #[error("{0:#}")]
    Validation(anyhow::Error),
    /// Failure while processing data. Exit code 2.
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        CliError::Validation(e.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Fails validation with a formatted message.
#[macro_export]
macro_rules! invalid {
    ($($arg:tt)*) => {
        return Err($crate::error::CliError::Validation(anyhow::anyhow!($($arg)*)))
    };
}
