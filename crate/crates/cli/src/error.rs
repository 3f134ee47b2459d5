use rydberg_walk::Error as CoreError;
use thiserror::Error;

/// Failure of one command. The variant decides the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidSpec(_)
            | CoreError::Incompatible { .. }
            | CoreError::OverlappingPairs(_)
            | CoreError::SiteOutOfRange { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidParameter(_) => CliError::Config(e.to_string()),
            CoreError::FitFailure(_)
            | CoreError::GapClosed { .. }
            | CoreError::NotQuantized { .. }
            | CoreError::UndefinedDirection(_)
            | CoreError::ResonantCollision { .. }
            | CoreError::Unreachable(_)
            | CoreError::Integration(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
