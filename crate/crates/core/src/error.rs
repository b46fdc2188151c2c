//! Error type shared by the crate.

use alloc::string::String;

/// Errors raised while constructing or processing maps and images.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two inputs that must share a resolution do not.
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        /// (width, height, channels) that was required.
        expected: (usize, usize, usize),
        /// (width, height, channels) that was supplied.
        actual: (usize, usize, usize),
    },
    /// A buffer length does not match its declared dimensions.
    #[error("buffer of length {len} does not hold {width}x{height}x{channels} values")]
    BufferLength {
        /// Declared width.
        width: usize,
        /// Declared height.
        height: usize,
        /// Declared channel count.
        channels: usize,
        /// Actual buffer length.
        len: usize,
    },
    /// A value violated a documented range or validity constraint.
    #[error("invalid value: {0}")]
    InvalidValue(String),
    /// Input carries no usable signal (for example an all-black photograph).
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
