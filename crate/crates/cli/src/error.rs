use std::path::PathBuf;

use thiserror::Error;

/// Everything a subcommand can fail with.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{source_name} line {line}: {message}")]
    ConfigLine {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("localization lost at step {step}; partial trajectory written to {}", trajectory.display())]
    Lost { step: usize, trajectory: PathBuf },

    #[error(transparent)]
    Core(#[from] radloc::Error),
}

impl CliError {
    /// 0 success, 1 usage or configuration, 2 data, 3 lost localization.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::ConfigLine { .. } | CliError::Config(_) => 1,
            CliError::Lost { .. } => 3,
            CliError::Core(radloc::Error::InvalidParameter(_) | radloc::Error::NotABinEdge(_)) => 1,
            CliError::Core(radloc::Error::LostLocalization { .. }) => 3,
            CliError::Io { .. } | CliError::Core(_) => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
