//! Experiment runner for the `vpsc` signal cipher.
//!
//! Each experiment reads an [`ExperimentSpec`], runs deterministically from
//! its seeds and returns plain records. The [`output`] module turns those
//! records into CSV files and a JSON manifest.

pub mod autocorr;
pub mod ber;
pub mod link;
pub mod output;
pub mod spec;
pub mod spectrum;
pub mod sync_trial;
pub mod theory;

pub use autocorr::{run_autocorrelation_analysis, AutocorrRecord, AutocorrReport, AutocorrTrace};
pub use ber::{run_ber_experiment, BerRecord, BerReport, ConstellationPoint};
pub use link::{FrameCipher, Link};
pub use output::run_and_write;
pub use spec::{CipherKind, ExperimentKind, ExperimentSpec, ModeSpec};
pub use spectrum::{run_spectrum_report, PsdRow, SpectrumReport, SpectrumSummary};
pub use sync_trial::{run_sync_trial, SyncTrialRecord, SyncTrialReport};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Core(#[from] vpsc::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
    #[error("sync failure: {0}")]
    Sync(String),
}

impl BenchError {
    /// Stable identifier used in the CLI's error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Spec(_) => "spec",
            Self::Core(vpsc::Error::SyncFailure(_)) | Self::Sync(_) => "sync",
            Self::Core(_) => "config",
            Self::Io(_) | Self::Output(_) => "io",
        }
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        Self::Output(e.to_string())
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        Self::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/keystream.md")]
    mod keystream {}
    #[doc = include_str!("../../../book/src/cipher.md")]
    mod cipher {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/link.md")]
    mod link {}
    #[doc = include_str!("../../../book/src/sync.md")]
    mod sync {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
