//! Vernam-style encryption of real-valued physical signals.
//!
//! A signal is cut into frames of `N` samples. Each frame is moved to the
//! frequency domain, every selected bin has its magnitude shifted modulo a
//! system-wide maximum `φ` and its angle rotated on the circle, and the
//! result is transformed back into a real signal occupying the same band.
//!
//! The crate also carries the pieces needed to evaluate the cipher:
//! baseline ciphers, a 16-QAM modem, a seeded channel simulator and the
//! receiver-side synchronization search.

pub mod baseline;
pub mod channel;
pub mod cipher;
pub mod error;
pub mod keystream;
pub mod modem;
pub mod spectral;
pub mod sync;

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use cipher::{BandMask, CipherConfig, Mode};
pub use error::{Error, Result};
pub use keystream::{KeyFrame, Keystream, SyncConfig};
pub use spectral::{analyze, synthesize, wrap_angle, SignalFrame, SpectrumFrame};
