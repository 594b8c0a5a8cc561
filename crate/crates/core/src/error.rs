use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("kernel of size {ksize} does not fit a {width}x{height} image")]
    KernelTooLarge {
        ksize: usize,
        width: usize,
        height: usize,
    },

    #[error("system matrix is not positive definite (pivot {row} = {pivot:e})")]
    Factorization { row: usize, pivot: f64 },

    #[error("non-finite voltage at step {step}")]
    NonFinite { step: usize },

    #[error("noise calibration did not reach {target:.3} dB (best {achieved:.3} dB)")]
    Calibration { target: f64, achieved: f64 },

    #[error("no spikelets detected")]
    NoSpikelets,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported image format: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),
}

/// Coarse error classes, used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Format,
    Numeric,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::UnsupportedFormat { .. } => ErrorClass::Format,
            Error::Config(_)
            | Error::InvalidParams(_)
            | Error::KernelTooLarge { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidImage(_) => ErrorClass::Config,
            Error::Factorization { .. }
            | Error::NonFinite { .. }
            | Error::Calibration { .. }
            | Error::NoSpikelets
            | Error::Degenerate(_) => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
