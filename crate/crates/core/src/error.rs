use thiserror::Error;

/// Errors raised by fitting, sampling and evaluation routines.
#[derive(Debug, Error)]
pub enum CsaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("degenerate column `{0}`: zero variance")]
    DegenerateColumn(String),

    #[error("insufficient observations: {0}")]
    InsufficientObservations(String),

    #[error("impossible design: {0}")]
    ImpossibleDesign(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("subset {members:?}: {source}")]
    Subset {
        members: Vec<usize>,
        #[source]
        source: Box<CsaError>,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: non-finite value `{value}`")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CsaError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CsaError {
    CsaError::InvalidParameter(msg.into())
}
