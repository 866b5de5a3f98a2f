use thiserror::Error;
use twocenter_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("collision: {0}")]
    Collision(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Numerical(_) | CliError::Io(_) => 1,
            CliError::Collision(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NearCollision { .. } | CoreError::CenterRay { .. } | CoreError::StepUnderflow { .. } => {
                CliError::Collision(e.to_string())
            }
            CoreError::ConstraintIntegrity { .. } => CliError::Verification(e.to_string()),
            CoreError::InvalidInput(_) | CoreError::UnsupportedParameter { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
