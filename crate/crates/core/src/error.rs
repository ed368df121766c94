use std::path::PathBuf;

/// Errors raised by the feature-selection library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("inconsistent group '{group}': {message}")]
    Consistency { group: String, message: String },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("empty split: no samples tagged '{0}'")]
    EmptySplit(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("fingerprint mismatch: {0}")]
    Fingerprint(String),

    #[error("run {run_id}: {source}")]
    Run {
        run_id: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
