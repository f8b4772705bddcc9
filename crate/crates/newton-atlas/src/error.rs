use newton_atlas_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad parameters or a malformed input file.
    #[error("{0}")]
    Validation(String),
    #[error("{unresolved} of {degree} roots unresolved")]
    Unresolved { unresolved: usize, degree: usize },
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Unresolved { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::EvaluationOverflow | CoreError::CriticalPoint | CoreError::NotClassifiable => {
                CliError::Internal(anyhow::Error::msg(e.to_string()))
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}
