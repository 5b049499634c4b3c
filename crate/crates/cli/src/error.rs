use contraction_lab::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Lab(#[from] LabError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// Process exit status: 2 config, 3 stability, 4 verification, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lab(LabError::Domain(_) | LabError::Parse(_)) => 2,
            CliError::Lab(LabError::Stability { .. } | LabError::Shift { .. }) => 3,
            CliError::Verification(_) => 4,
            CliError::Lab(LabError::Io(_)) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
