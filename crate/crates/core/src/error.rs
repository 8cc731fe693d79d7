use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}, column {column}: label {value:?} is not an integer")]
    BadLabel {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("label column {0} not found")]
    UnknownColumn(String),
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("csv: {0}")]
    Csv(String),
    #[error("idx: bad magic in {file}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        file: String,
        expected: u32,
        found: u32,
    },
    #[error("idx: image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("idx: {file} truncated: expected {expected} bytes, found {found}")]
    Truncated {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("class {class} would have no training samples")]
    EmptyClass { class: usize },
    #[error("noise kind {0} requires an image shape")]
    MissingImageShape(&'static str),
    #[error("image shape {height}x{width} does not match {n} features")]
    ShapeMismatch {
        height: usize,
        width: usize,
        n: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("target dimension d={d} exceeds feature dimension n={n}")]
    DimensionTooLarge { d: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value encountered at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("malformed projection file: {0}")]
    BadProjectionFile(String),
    #[error("json: {0}")]
    Json(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionTooLarge { .. }
            | Error::InvalidParameter(_)
            | Error::UnknownMethod(_)
            | Error::UnknownColumn(_)
            | Error::MissingImageShape(_)
            | Error::Json(_) => ErrorKind::Usage,
            Error::NonFinite { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(d: usize, n: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "target dimension must be at least 1".into(),
        ));
    }
    if d > n {
        return Err(Error::DimensionTooLarge { d, n });
    }
    Ok(())
}
