use std::path::PathBuf;

use thiserror::Error;

use crate::selection::TrajectoryRecord;

/// Errors raised anywhere in the testing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "insufficient samples: {context} (m = {m}, n = {n}, need at least {required} per class)"
    )]
    InsufficientSamples {
        context: &'static str,
        m: usize,
        n: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("degenerate bandwidth: all points coincide")]
    DegenerateBandwidth,

    #[error("degenerate complexity proxy: cannot form the calibration ratio")]
    DegenerateProxy,

    #[error("numerical abort in {stage}: non-finite criterion value")]
    NumericalAbort {
        stage: &'static str,
        last_finite: Option<Box<TrajectoryRecord>>,
    },

    #[error("{path}: row {row}, column {column}: {value:?} is not a finite number")]
    CsvNonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    CsvRagged {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("column count mismatch: X has {x_cols} columns, Y has {y_cols}")]
    CsvColumnMismatch { x_cols: usize, y_cols: usize },

    #[error("{path}: no data rows")]
    CsvEmpty { path: PathBuf },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a non-finite criterion evaluation.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalAbort { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
