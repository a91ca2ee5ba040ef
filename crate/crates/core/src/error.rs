//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A raster file could not be decoded or has the wrong shape/bit depth.
    #[error("format error: {0}")]
    Format(String),

    /// A metadata sidecar is missing a required field or cannot be parsed.
    #[error("metadata error: {0}")]
    Metadata(String),

    /// An input violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Pixel index outside the raster.
    #[error("index ({x}, {y}) out of bounds for {width}x{height} raster")]
    Bounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    /// A thermal-frame pixel not covered by the warped image footprint.
    #[error("pixel ({x}, {y}) is outside the registered image footprint")]
    OutsideFootprint { x: usize, y: usize },

    /// Registration left no valid pixels to segment.
    #[error("registered pair has an empty valid footprint")]
    EmptyFootprint,

    /// The corrected-NDVI scale factor divides by zero (masked maximum is 0).
    #[error("degenerate NDVI correction: maximum over the mask is zero")]
    DegenerateScale,

    /// An index computation was asked to average over an empty mask.
    #[error("mask selects no pixels")]
    EmptyMask,

    /// Pearson correlation is undefined (constant series or too few points).
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    /// A tabular input lacks a required column.
    #[error("schema error in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    /// Too few joined records to run the validation statistics.
    #[error("insufficient data: {got} matched records, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    /// A batch directory contained nothing to process.
    #[error("no input captures found in {0}")]
    NoInput(PathBuf),

    /// Prediction/truth directories do not pair up one-to-one.
    #[error("unpaired files: {0:?}")]
    Pairing(Vec<String>),

    /// A synthetic scene specification cannot be realized.
    #[error("scene spec error: {0}")]
    SceneSpec(String),

    /// Underlying file I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
