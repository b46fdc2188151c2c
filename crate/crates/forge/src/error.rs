//! Error type for training, IO and the command line.

use std::path::PathBuf;

use crate::losses::LossReport;

/// Everything that can go wrong outside the pure material model.
#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    /// Tensor backend failure.
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    /// Material model or image validation failure.
    #[error(transparent)]
    Core(#[from] svbrdf_core::Error),
    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Image decode or encode failure.
    #[error("{path}: {source}")]
    Image {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: image::ImageError,
    },
    /// Two tensors that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Invalid configuration value or file.
    #[error("config: {0}")]
    Config(String),
    /// Checkpoint written by an incompatible format version.
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion {
        /// Version this build reads and writes.
        expected: u32,
        /// Version found in the file.
        found: u32,
    },
    /// Truncated or corrupted checkpoint.
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    /// Checkpoint trained with an incompatible architecture or tile size.
    #[error("checkpoint fingerprint {found:016x} does not match configuration {expected:016x}")]
    Fingerprint {
        /// Fingerprint of the current configuration.
        expected: u64,
        /// Fingerprint stored in the checkpoint.
        found: u64,
    },
    /// The perceptual feature extractor could not be loaded.
    #[error("feature extractor unavailable: {0}")]
    ExtractorUnavailable(String),
    /// A loss term became NaN or infinite.
    #[error("non-finite loss at iteration {iteration}: {report:?}")]
    NonFiniteLoss {
        /// Iteration that produced the loss.
        iteration: u64,
        /// All loss terms of the failing step.
        report: LossReport,
    },
}

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, ForgeError>;

impl ForgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }
}
