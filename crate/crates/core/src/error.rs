use thiserror::Error;

/// Errors raised by the cipher, keystream, channel and sync layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frame length {0} is not a power of two >= 8")]
    FrameLength(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("spectrum is not conjugate symmetric at bin {bin}")]
    Symmetry { bin: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("counter {counter} outside period {period}")]
    Counter { counter: u64, period: u64 },

    #[error("elapsed time {0} s is negative")]
    Clock(f64),

    #[error("magnitude {magnitude} at bin {bin} is not below phi = {phi}")]
    PhiViolation { bin: usize, magnitude: f64, phi: f64 },

    #[error("invalid key: {0}")]
    Key(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("whiteness metric is undefined for an all-zero frame")]
    UndefinedMetric,

    #[error("synchronization failed: {0}")]
    SyncFailure(String),

    #[error("capture file: {0}")]
    Capture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
