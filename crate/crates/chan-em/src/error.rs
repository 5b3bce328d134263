use std::path::PathBuf;

/// Harness failures, grouped by the process exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("numerical failure ({name}): {0}", name = .0.name())]
    Numerical(#[from] chan_em_core::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        HarnessError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 4,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
