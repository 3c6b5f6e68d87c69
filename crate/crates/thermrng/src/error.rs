use std::path::Path;

use thermrng_core::Error as CoreError;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    StatisticalFailure = 1,
    Usage = 2,
    Io = 3,
    SecurityRefusal = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `offset` is the byte position of the problem.
    #[error("{path}: byte {offset}: {message}")]
    Format {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("refused: {0} (pass --force to override)")]
    Refused(String),

    #[error("{0}")]
    Statistical(String),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Usage(_) => ExitCode::Usage,
            AppError::Core(CoreError::Security(_)) => ExitCode::SecurityRefusal,
            AppError::Core(_) => ExitCode::Usage,
            AppError::Io { .. } | AppError::Format { .. } => ExitCode::Io,
            AppError::Refused(_) => ExitCode::SecurityRefusal,
            AppError::Statistical(_) => ExitCode::StatisticalFailure,
        }
    }
}
