use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("unparsable value {value:?} at row {row}")]
    Parse { row: usize, value: String },

    #[error("non-positive price at row {row}")]
    NonPositivePrice { row: usize },

    #[error("column {0} not found")]
    MissingColumn(String),

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("series has zero total mass")]
    ZeroMass,

    #[error("negative value {value} at index {index} in a positive series")]
    NegativeValue { index: usize, value: f64 },

    #[error("scale {scale} outside [1, {len}]")]
    ScaleOutOfRange { scale: usize, len: usize },

    #[error("zero-measure interval at negative order (scale {scale})")]
    ZeroMeasureNegativeOrder { scale: usize },

    #[error("degenerate partition function at scale {scale}, order {q}")]
    DegeneratePartition { scale: usize, q: f64 },

    #[error("need at least {needed} usable scales for the fit, got {got}")]
    InsufficientScales { needed: usize, got: usize },

    #[error("need at least {needed} points for the fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("query outside calibrated range: {0}")]
    OutOfRange(String),
}

impl Error {
    /// True for failures caused by the input data or arguments rather than
    /// by the numerics downstream.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::Parse { .. }
                | Error::NonPositivePrice { .. }
                | Error::MissingColumn(_)
                | Error::NegativeValue { .. }
                | Error::InvalidParameter(_)
        )
    }
}
