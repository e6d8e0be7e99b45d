use std::path::PathBuf;

/// Failures of a command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no target found: {0}")]
    NoTarget(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("replay mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Core(#[from] ghostimg_core::Error),
}

impl CliError {
    pub const EXIT_MISMATCH: i32 = 1;
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_NO_TARGET: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::NoTarget(_) | CliError::Core(ghostimg_core::Error::NoTarget) => Self::EXIT_NO_TARGET,
            CliError::Io { .. } | CliError::Format { .. } => Self::EXIT_IO,
            CliError::Mismatch(_) => Self::EXIT_MISMATCH,
            CliError::Core(_) => Self::EXIT_CONFIG,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
