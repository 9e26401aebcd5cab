//! Declarative experiment description, loaded from TOML.
//!
//! Every key has a default, so an empty document is a valid BER run of the
//! desk-scale link over AWGN.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vpsc::channel::{Fading, Tap};
use vpsc::modem::ModemConfig;
use vpsc::{BandMask, Mode};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Ber,
    /// BER over a sweep of multipath delay scales.
    BerDelay,
    Autocorr,
    Spectrum,
    Sync,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ber => "ber",
            Self::BerDelay => "ber-delay",
            Self::Autocorr => "autocorr",
            Self::Spectrum => "spectrum",
            Self::Sync => "sync",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::Ber, Self::BerDelay, Self::Autocorr, Self::Spectrum, Self::Sync]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Spec(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CipherKind {
    None,
    #[default]
    Vpsc,
    Fcs,
    Alm,
    Rsa,
}

impl CipherKind {
    pub const ALL: [CipherKind; 5] = [Self::None, Self::Vpsc, Self::Fcs, Self::Alm, Self::Rsa];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Vpsc => "vpsc",
            Self::Fcs => "fcs",
            Self::Alm => "alm",
            Self::Rsa => "rsa",
        }
    }
}

impl fmt::Display for CipherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CipherKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Spec(format!("unknown cipher {s:?}")))
    }
}

/// Serializable mirror of [`vpsc::Mode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Plain,
    PreemptiveRise,
    StatisticalFloor,
    #[default]
    Combined,
}

impl From<ModeSpec> for Mode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Plain => Mode::Plain,
            ModeSpec::PreemptiveRise => Mode::PreemptiveRise,
            ModeSpec::StatisticalFloor => Mode::StatisticalFloor,
            ModeSpec::Combined => Mode::Combined,
        }
    }
}

impl From<Mode> for ModeSpec {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Plain => ModeSpec::Plain,
            Mode::PreemptiveRise => ModeSpec::PreemptiveRise,
            Mode::StatisticalFloor => ModeSpec::StatisticalFloor,
            Mode::Combined => ModeSpec::Combined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModemSection {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub symbol_duration_s: f64,
    pub amplitude: f64,
}

impl Default for ModemSection {
    fn default() -> Self {
        let m = ModemConfig::desk_scale();
        Self {
            carrier_hz: m.carrier_hz,
            sample_rate_hz: m.sample_rate_hz,
            symbol_duration_s: m.symbol_duration,
            amplitude: m.amplitude,
        }
    }
}

impl ModemSection {
    pub fn config(&self) -> ModemConfig {
        ModemConfig {
            carrier_hz: self.carrier_hz,
            sample_rate_hz: self.sample_rate_hz,
            symbol_duration: self.symbol_duration_s,
            amplitude: self.amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FadingSpec {
    Static,
    #[default]
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TapSpec {
    /// Samples, before the delay scale.
    pub delay: f64,
    pub mean_power: f64,
    pub doppler_hz: f64,
    pub fading: FadingSpec,
}

impl Default for TapSpec {
    fn default() -> Self {
        Self {
            delay: 0.0,
            mean_power: 1.0,
            doppler_hz: 0.0,
            fading: FadingSpec::Static,
        }
    }
}

impl TapSpec {
    pub fn tap(&self) -> Tap {
        Tap {
            delay: self.delay,
            mean_power: self.mean_power,
            doppler_hz: self.doppler_hz,
            fading: match self.fading {
                FadingSpec::Static => Fading::Static,
                FadingSpec::Rayleigh => Fading::Rayleigh,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Apply `taps` in `ber` runs. `ber-delay` always does.
    pub multipath: bool,
    pub taps: Vec<TapSpec>,
    /// Channel buffer in samples. Echoes delayed further are lost.
    pub horizon: Option<usize>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            multipath: false,
            horizon: None,
            taps: vec![
                TapSpec::default(),
                TapSpec {
                    delay: 5.0,
                    mean_power: 0.05,
                    doppler_hz: 30.0,
                    fading: FadingSpec::Rayleigh,
                },
                TapSpec {
                    delay: 12.0,
                    mean_power: 0.025,
                    doppler_hz: 60.0,
                    fading: FadingSpec::Rayleigh,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VpscSection {
    /// Fixed `φ`. When absent it is `phi_margin` times the largest clean
    /// symbol magnitude.
    pub phi: Option<f64>,
    pub phi_margin: f64,
    /// Fixed `λ`. When absent it is `lambda_sigmas` per-bin noise deviations.
    pub lambda: Option<f64>,
    pub lambda_sigmas: f64,
    /// Lower bound on the derived `λ` and `ψ`, as a fraction of `φ`.
    pub lambda_floor: f64,
    pub psi_multiplier: u32,
    /// Encrypt every bin instead of the band below.
    pub full_band: bool,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
}

impl Default for VpscSection {
    fn default() -> Self {
        Self {
            phi: None,
            phi_margin: 1.05,
            lambda: None,
            lambda_sigmas: 10.0,
            lambda_floor: 1e-3,
            psi_multiplier: 10,
            full_band: false,
            band_low_hz: 4_000.0,
            band_high_hz: 12_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Sample range covered by the ALM offset and the RSA quantizer.
    pub sample_low: f64,
    pub sample_high: f64,
    pub rsa_levels: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            sample_low: -4.5,
            sample_high: 4.5,
            rsa_levels: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutocorrSection {
    pub frames: usize,
    pub keys: usize,
    pub max_lag: usize,
    /// Period in samples of the sine fed to RSA.
    pub sine_period: usize,
}

impl Default for AutocorrSection {
    fn default() -> Self {
        Self {
            frames: 16,
            keys: 3,
            max_lag: 512,
            sine_period: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub frames: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { frames: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSection {
    /// Injected propagation delays in samples.
    pub delays: Vec<usize>,
    pub n_keys: usize,
    /// Length of the receiver capture in frames.
    pub buffer_frames: usize,
    /// Frame index at which the capture starts.
    pub capture_frame: u64,
    /// Trials run with a receiver holding the wrong secret.
    pub wrong_seed_trials: usize,
    /// Write each trial's capture next to the report.
    pub write_captures: bool,
    /// Replay this capture instead of simulating one.
    pub capture_path: Option<PathBuf>,
}

impl Default for SyncSection {
    fn default() -> Self {
        Self {
            delays: vec![0, 17, 37, 101],
            n_keys: 8,
            buffer_frames: 12,
            capture_frame: 20,
            wrong_seed_trials: 0,
            write_captures: false,
            capture_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub cipher: CipherKind,
    pub mode: ModeSpec,
    /// Es/N0 in dB for BER runs, per-sample SNR for sync runs. `inf`
    /// disables noise.
    pub snr_db: Vec<f64>,
    pub delay_scale: Vec<f64>,
    pub symbol_count: usize,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    /// Hex-encoded keystream secret shared by both ends.
    pub secret_seed: String,
    /// Soft decisions kept per sweep point for constellation plots.
    pub constellation_points: usize,
    pub modem: ModemSection,
    pub channel: ChannelSection,
    pub vpsc: VpscSection,
    pub baseline: BaselineSection,
    pub autocorr: AutocorrSection,
    pub spectrum: SpectrumSection,
    pub sync: SyncSection,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Ber,
            cipher: CipherKind::Vpsc,
            mode: ModeSpec::Combined,
            snr_db: vec![6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            delay_scale: vec![1.0],
            symbol_count: 10_000,
            seeds: vec![1],
            output: PathBuf::from("results"),
            secret_seed: "00112233445566778899aabbccddeeff".into(),
            constellation_points: 0,
            modem: ModemSection::default(),
            channel: ChannelSection::default(),
            vpsc: VpscSection::default(),
            baseline: BaselineSection::default(),
            autocorr: AutocorrSection::default(),
            spectrum: SpectrumSection::default(),
            sync: SyncSection::default(),
        }
    }
}

fn spec_err(msg: impl Into<String>) -> BenchError {
    BenchError::Spec(msg.into())
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self, BenchError> {
        let spec: Self = toml::from_str(s).map_err(|e| spec_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| spec_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn mode(&self) -> Mode {
        self.mode.into()
    }

    /// Bins VPSC and FCS encrypt.
    pub fn band_mask(&self) -> Result<BandMask, BenchError> {
        let m = self.modem.config();
        let n = m.symbol_samples();
        Ok(if self.vpsc.full_band {
            BandMask::full(n)?
        } else {
            BandMask::from_hz(n, m.sample_rate_hz, self.vpsc.band_low_hz, self.vpsc.band_high_hz)?
        })
    }

    pub fn secret(&self) -> Result<Vec<u8>, BenchError> {
        let bytes = hex::decode(self.secret_seed.trim())
            .map_err(|e| spec_err(format!("secret_seed: {e}")))?;
        if bytes.is_empty() {
            return Err(spec_err("secret_seed is empty"));
        }
        Ok(bytes)
    }

    /// Rejects inconsistent settings before anything runs.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.symbol_count == 0 {
            return Err(spec_err("symbol_count must be at least 1"));
        }
        if self.snr_db.is_empty() || self.delay_scale.is_empty() || self.seeds.is_empty() {
            return Err(spec_err("snr_db, delay_scale and seeds must be non-empty"));
        }
        if let Some(v) = self.snr_db.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
            return Err(spec_err(format!("invalid SNR {v}")));
        }
        if let Some(v) = self.delay_scale.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(spec_err(format!("invalid delay scale {v}")));
        }
        self.secret()?;
        self.modem.config().validate()?;
        if self.channel.taps.is_empty() {
            return Err(spec_err("channel.taps is empty"));
        }
        let v = &self.vpsc;
        if v.phi.is_some_and(|p| !(p.is_finite() && p > 0.0)) {
            return Err(spec_err("vpsc.phi must be positive"));
        }
        if !(v.phi_margin.is_finite() && v.phi_margin > 1.0) {
            return Err(spec_err("vpsc.phi_margin must exceed 1"));
        }
        if v.lambda.is_some_and(|l| !(l.is_finite() && l >= 0.0)) {
            return Err(spec_err("vpsc.lambda must be non-negative"));
        }
        if !(v.lambda_sigmas.is_finite() && v.lambda_sigmas >= 0.0) {
            return Err(spec_err("vpsc.lambda_sigmas must be non-negative"));
        }
        if !(v.lambda_floor.is_finite() && v.lambda_floor >= 0.0) {
            return Err(spec_err("vpsc.lambda_floor must be non-negative"));
        }
        self.band_mask()?;
        let b = &self.baseline;
        if !(b.sample_low.is_finite() && b.sample_high.is_finite() && b.sample_low < b.sample_high) {
            return Err(spec_err("baseline sample range is empty"));
        }
        if b.rsa_levels < 2 {
            return Err(spec_err("baseline.rsa_levels must be at least 2"));
        }
        let a = &self.autocorr;
        if a.frames == 0 || a.keys == 0 || a.max_lag == 0 || a.sine_period < 2 {
            return Err(spec_err("autocorr frames, keys, max_lag and sine_period must be positive"));
        }
        if self.spectrum.frames == 0 {
            return Err(spec_err("spectrum.frames must be positive"));
        }
        let s = &self.sync;
        if s.n_keys == 0 || s.buffer_frames < 2 {
            return Err(spec_err("sync needs n_keys ≥ 1 and buffer_frames ≥ 2"));
        }
        if s.capture_path.is_none() && s.delays.is_empty() {
            return Err(spec_err("sync.delays is empty"));
        }
        Ok(())
    }
}
