//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LiftError {
    /// Degenerate camera geometry (eye == target, up parallel to gaze, bad
    /// frustum parameters).
    #[error("camera geometry error: {0}")]
    Geometry(String),

    /// Shape or view-count mismatch between tensors and the configured
    /// architecture.
    #[error("shape error: {0}")]
    Shape(String),

    /// Environment contract violation, e.g. stepping a finished episode.
    #[error("environment contract violation: {0}")]
    Contract(String),

    /// Non-finite loss or activation during training.
    #[error("training error: {0}")]
    Training(String),

    /// Degenerate feature batch (zero-norm row) fed to a similarity loss.
    #[error("degenerate feature: {0}")]
    DegenerateFeature(String),

    /// Parameter archive fingerprint does not match the configured
    /// architecture.
    #[error("architecture fingerprint mismatch: expected {expected:#018x}, found {found:#018x}")]
    Fingerprint { expected: u64, found: u64 },

    /// Corrupt or truncated file payload.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Missing input produced by an earlier pipeline stage.
    #[error("missing dependency: {0}")]
    MissingDependency(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LiftError>;
