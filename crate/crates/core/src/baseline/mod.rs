//! Comparison ciphers: frequency component scrambling, amplitude log
//! masking and sample-wise RSA.
//!
//! They are implemented as published, weaknesses included.

mod alm;
mod fcs;
mod rsa;

pub use alm::{alm_decrypt, alm_encrypt, AlmKey, MIN_FACTOR};
pub use fcs::{fcs_decrypt, fcs_encrypt, FcsKey};
pub use rsa::{rsa_decrypt, rsa_encrypt, RsaSampleKey, DEFAULT_EXPONENT};
