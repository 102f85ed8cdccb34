//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by calibration, sampling, and data handling.
#[derive(Debug, Error)]
pub enum LsciError {
    /// Two operands live on different grids (or grids of different sizes).
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Row/column counts of paired data disagree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A local measure has no finite atoms to compute a depth against.
    #[error("empty measure: no finite atoms")]
    EmptyMeasure,

    /// Weighted covariance has no usable spectrum (e.g. all residuals equal).
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    /// All localization weights truncated to zero.
    #[error("degenerate weights: all weights are zero")]
    DegenerateWeights,

    /// Operation not defined for the given inputs.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Inverse-transform input outside the open unit interval.
    #[error("invalid quantile level u = {0}; must lie in (0, 1)")]
    InvalidU(f64),

    /// Calibration set is empty.
    #[error("empty calibration set")]
    EmptyCalibration,

    /// Ensemble has no members to reduce.
    #[error("empty ensemble")]
    EmptyEnsemble,

    /// Rejection sampler exhausted its proposal budget without acceptances.
    #[error(
        "acceptance stalled: {accepted} accepted out of {proposed} proposals (rate {rate:.3e})"
    )]
    AcceptanceStalled {
        accepted: usize,
        proposed: usize,
        rate: f64,
    },

    /// Too few calibration points for the requested quantile rank.
    #[error("insufficient calibration: need at least {needed}, got {got}")]
    InsufficientCalibration { needed: usize, got: usize },

    /// Normal equations are rank-deficient and no ridge penalty was given.
    #[error("singular system: design is rank-deficient and ridge penalty is zero")]
    SingularSystem,

    /// Predictor used before fitting.
    #[error("predictor is not fitted")]
    NotFitted,

    /// Bad run configuration.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed CSV or numeric text.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LsciError>;
