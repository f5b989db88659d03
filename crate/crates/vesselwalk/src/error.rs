//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, codecs and the analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Raster payload could not be decoded; carries the byte offset at which
    /// decoding failed.
    #[error("raster decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    /// Grid dimensions are unusable (zero-sized, mismatched with the payload,
    /// or not divisible as required).
    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    /// Two grids that must share dimensions do not.
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    /// A probability value fell outside [0, 1] (or was NaN).
    #[error("probability out of range at index {index}: {value}")]
    ProbabilityRange { index: usize, value: f64 },

    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Least-squares curve fit failed (too few points or rank-deficient
    /// system).
    #[error("curve fit failed: {0}")]
    FitFailed(String),

    /// No target pixel could be determined inside the region of interest.
    #[error("no target candidate: {0}")]
    NoTarget(String),

    /// A metric is undefined for the given inputs (e.g. single-class AUC or
    /// constant-map Otsu).
    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    /// Synthetic fixture generation could not satisfy the configuration.
    #[error("synthesis config error: {0}")]
    SynthConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
