use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, configuration or input paths. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that fails after the inputs were accepted. Exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Internal(_) => 1,
        }
    }
}

impl From<frgnn_core::Error> for CliError {
    fn from(e: frgnn_core::Error) -> Self {
        use frgnn_core::Error as E;
        match e {
            E::Bundle { .. } | E::InvalidArgument(_) => Self::Usage(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Internal(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
