use std::path::PathBuf;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch on {axis}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("{0}: backward called without a forward cache")]
    MissingCache(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {index} has zero samples; drop or merge it before weighting")]
    EmptyClass { index: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("schema mismatch: model expects {model}, data provides {data}")]
    SchemaMismatch { model: String, data: String },

    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(
        op: &'static str,
        axis: &'static str,
        expected: usize,
        actual: usize,
    ) -> Self {
        Error::Shape {
            op,
            axis,
            expected,
            actual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
