use thiserror::Error;

/// Errors surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fracvol::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Exit status for a requested run whose checks failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Core(e) => match e {
                fracvol::Error::Domain { .. }
                | fracvol::Error::LongMemoryRequired(_)
                | fracvol::Error::UnknownPreset { .. }
                | fracvol::Error::OutOfGrid { .. }
                | fracvol::Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            Self::Io { .. } | Self::Csv(_) | Self::Json(_) => EXIT_NUMERICAL,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
