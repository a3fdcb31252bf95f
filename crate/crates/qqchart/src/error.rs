//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide error enum. Variants are grouped by the layer that raises
/// them: parameter validation, pool file I/O, calibration, and the
/// line-oriented monitor input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or free function received an argument outside its
    /// documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two inputs that must agree in length did not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A probability-scale input left the open interval (0, 1).
    #[error("value {0} outside the open unit interval")]
    OutsideUnitInterval(f64),

    /// An aggregate was requested over an empty slice.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Underlying file I/O failed while reading or writing a pool file.
    #[error("pool file {path}: {source}")]
    PoolIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file does not start with the pool magic bytes.
    #[error("pool file {path}: bad magic, not a pool file")]
    PoolBadMagic { path: PathBuf },

    /// The file uses a format version this build does not understand.
    #[error("pool file {path}: unsupported version {found}")]
    PoolUnsupportedVersion { path: PathBuf, found: u32 },

    /// The file ended before the declared payload was read.
    #[error("pool file {path}: truncated")]
    PoolTruncated { path: PathBuf },

    /// The stored checksum does not match the payload.
    #[error("pool file {path}: checksum mismatch")]
    PoolChecksum { path: PathBuf },

    /// The payload is structurally invalid (unknown kind tag,
    /// inconsistent sizes).
    #[error("pool file {path}: {message}")]
    PoolFormat { path: PathBuf, message: String },

    /// The pool was built for a different local statistic than requested.
    #[error("pool kind mismatch: expected {expected}, found {found}")]
    PoolKindMismatch { expected: String, found: String },

    /// A scheme operation that needs a control limit ran before one was
    /// set or calibrated.
    #[error("scheme {0} has no control limit; calibrate first or set one")]
    NotCalibrated(String),

    /// Calibration could not bracket or reach the target within
    /// tolerance; the message carries the diagnostic detail.
    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    /// A malformed row or premature end of input in monitor mode.
    #[error("monitor input line {line}: {message}")]
    MonitorInput { line: usize, message: String },

    /// Any other runtime failure with a human-readable description.
    #[error("{0}")]
    Runtime(String),
}

pub type Result<T> = std::result::Result<T, Error>;
