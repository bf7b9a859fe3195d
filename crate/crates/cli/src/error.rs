use thiserror::Error;

/// Process exit codes: 0 success/verified, 1 verification failure, 2 input
/// error, 3 resource/budget exhaustion.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<envy_subsidy::Error> for CliError {
    fn from(err: envy_subsidy::Error) -> Self {
        use envy_subsidy::Error::*;
        match err {
            BudgetExceeded(_) => CliError::Resource(err.to_string()),
            Internal(_) | NotEnvyFreeable => CliError::Verification(err.to_string()),
            _ => CliError::Input(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
