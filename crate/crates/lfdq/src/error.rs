use std::path::{Path, PathBuf};

/// Errors of the file layer and the commands built on it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", .0.display())]
    FileMissing(PathBuf),
    #[error("{}: {message}", path.display())]
    SchemaViolation { path: PathBuf, message: String },
    #[error("{}: timestamps must be strictly increasing (sample {index})", path.display())]
    NonMonotonicTime { path: PathBuf, index: usize },
    /// The file parsed but describes an invalid object.
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: lfdq_core::Error },
    #[error(transparent)]
    Core(#[from] lfdq_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Failed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit code for input problems.
pub const EXIT_SCHEMA: i32 = 2;
/// Process exit code for everything that fails after the inputs were read.
pub const EXIT_EVALUATION: i32 = 3;

impl Error {
    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        Error::SchemaViolation {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileMissing(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    /// Maps a core error raised while building an object from `path`.
    pub fn invalid(path: &Path, source: lfdq_core::Error) -> Self {
        match source {
            lfdq_core::Error::NonMonotonicTime { index } => Error::NonMonotonicTime {
                path: path.to_path_buf(),
                index,
            },
            source => Error::Invalid {
                path: path.to_path_buf(),
                source,
            },
        }
    }

    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            Error::FileMissing(_) | Error::SchemaViolation { .. } | Error::NonMonotonicTime { .. } | Error::Invalid { .. }
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_schema() {
            EXIT_SCHEMA
        } else {
            EXIT_EVALUATION
        }
    }
}
