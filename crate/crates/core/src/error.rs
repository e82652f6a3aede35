use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region: no grid points fall inside the selection")]
    EmptyRegion,

    #[error("mask/grid mismatch: {0}")]
    MaskGridMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("sample too small: n = {n} but k = {k}")]
    SampleTooSmall { n: usize, k: usize },

    #[error("invalid power curve: {0}")]
    InvalidPowerCurve(String),

    #[error("non-uniform time axis: {0}")]
    NonUniformTime(String),

    #[error("zero reference power")]
    ZeroReference,

    #[error("degenerate regression input: {0}")]
    DegenerateRegression(String),

    #[error("WGRD parse error at byte offset {offset}: {reason}")]
    Parse { offset: u64, reason: String },

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
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
