use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, schema or parameter values.
    #[error("{0}")]
    Validation(String),
    /// A numerical guard aborted the computation.
    #[error("numerical guard aborted the run: {0}")]
    Guard(decolab::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<decolab::Error> for CliError {
    fn from(e: decolab::Error) -> Self {
        if e.is_guard() {
            CliError::Guard(e)
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
