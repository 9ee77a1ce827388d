use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] btspec_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl CliError {
    /// 2 config, 3 domain, 4 numerical failure; i/o problems count as config.
    pub fn exit_code(&self) -> i32 {
        use btspec_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Output(_) => 2,
            CliError::Core(E::Domain(_) | E::Mismatch(_)) => 3,
            CliError::Core(E::Io(_)) => 2,
            CliError::Core(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
