use std::path::PathBuf;

use rsklpr::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] rsklpr::Error),
    #[error("{0}")]
    Usage(String),
    #[error("unknown suite {name:?}; valid suites: {valid}")]
    UnknownSuite { name: String, valid: String },
    #[error("cannot write {path}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("every bootstrap replicate failed ({failed} of {replicates})")]
    AllReplicatesFailed { failed: usize, replicates: usize },
}

impl BenchError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            BenchError::Core(e) => e.kind(),
            BenchError::Write { .. } => ErrorKind::Data,
            BenchError::AllReplicatesFailed { .. } => ErrorKind::Numerical,
            BenchError::Usage(_) | BenchError::UnknownSuite { .. } | BenchError::Config(_) => ErrorKind::Usage,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: impl Into<std::io::Error>) -> Self {
        BenchError::Write {
            path: path.into(),
            source: source.into(),
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
