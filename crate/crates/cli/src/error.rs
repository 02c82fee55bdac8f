use thiserror::Error;

/// Exit status 2 for bad input, 1 for a channel or check that fails.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<stinespring::Error> for CliError {
    fn from(e: stinespring::Error) -> Self {
        use stinespring::Error as E;
        match e {
            E::InvalidKraus(_) | E::NotMinimal { .. } | E::SingularCorrelation { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
