use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pressure-modeling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("joint {joint} = {value} outside limits [{lo}, {hi}]")]
    OutOfLimits {
        joint: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("cylinder length {length} m outside feasible interval ({lo}, {hi})")]
    LengthOutOfRange { length: f64, lo: f64, hi: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("linkage gain {gain} m/rad is singular")]
    Singular { gain: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    Conditioning { jitter: f64 },

    #[error("series has {len} samples, fewer than the filter window {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-uniform timestamp at row {row}: {time} s")]
    Timing { row: usize, time: f64 },

    #[error("actuator {actuator}: {partition} partition has {rows} rows, at least {required} required")]
    InsufficientData {
        actuator: usize,
        partition: &'static str,
        rows: usize,
        required: usize,
    },

    #[error("actuator {actuator} {partition} model: {source}")]
    Training {
        actuator: usize,
        partition: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bundle format version {found} is not supported (expected {expected}); re-train or upgrade the bundle")]
    Version { found: u32, expected: u32 },

    #[error("geometry hash mismatch: bundle was trained with {bundle}, featurization uses {current}")]
    GeometryMismatch { bundle: String, current: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("plot: {0}")]
    Plot(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_sample(index: usize, source: Error) -> Self {
        Error::AtSample {
            index,
            source: Box::new(source),
        }
    }

    /// True for errors caused by bad user input (config, schema, geometry)
    /// rather than a failure while running the pipeline.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Geometry(_)
            | Error::Schema(_)
            | Error::Timing { .. }
            | Error::Version { .. }
            | Error::GeometryMismatch { .. }
            | Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Csv(_) => true,
            Error::AtSample { source, .. } | Error::Training { source, .. } => {
                source.is_config_error()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
