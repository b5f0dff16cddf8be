use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] merw_core::Error),
    #[error("check failed: {0}")]
    Assert(String),
}

impl CliError {
    /// 1 invalid config, 2 runtime failure, 3 failed `--assert`.
    pub fn exit_code(&self) -> i32 {
        use merw_core::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Core(E::InvalidParam(_) | E::Regime(_) | E::Empty(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Assert(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
