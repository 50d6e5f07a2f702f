use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("target not binary: row {row} has value `{value}`")]
    TargetNotBinary { row: usize, value: String },
    #[error("no data rows")]
    NoRows,
    #[error("duplicate feature name `{0}`")]
    DuplicateName(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("class absent: labels contain only {0}")]
    ClassAbsent(u8),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("column-count mismatch: model expects {expected}, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("auc needs both classes present")]
    SingleClass,
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Context { source, .. } => source.kind(),
            Error::InvalidParameter(_) | Error::UnknownFeature(_) => ErrorKind::Config,
            Error::NonFinite(_) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}
