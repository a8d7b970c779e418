use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("malformed workload: {skipped} of {total} rows could not be parsed")]
    MostlyMalformed { skipped: usize, total: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty statement")]
    EmptyStatement,
    #[error("no labeled queries for task `{0}`")]
    NoLabels(String),
    #[error("label {value} is below the transform minimum {min}")]
    OutOfTransformDomain { value: f64, min: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient in `{segment}` at offset {offset}")]
    NonFiniteGradient { segment: String, offset: usize },
    #[error("bundle error: {0}")]
    Bundle(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
