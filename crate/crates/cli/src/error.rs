use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Precision(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Argument(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}

impl From<adrx_core::Error> for CliError {
    fn from(e: adrx_core::Error) -> Self {
        match e {
            adrx_core::Error::InvalidArgument(m) => CliError::Argument(m),
            adrx_core::Error::Precision(m) => CliError::Precision(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
