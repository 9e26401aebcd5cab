//! Seeded channel impairments: AWGN, multipath fading and bulk delay.
//!
//! Every operation is a pure function of its input, its configuration and
//! `rng_seed`. Noise and each fading tap draw from separate ChaCha streams,
//! so changing the tap list never perturbs the noise realization.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{forward_fft, inverse_fft};

const NOISE_STREAM: u64 = 1;
const TAP_STREAM_BASE: u64 = 16;

/// Time behaviour of a tap's complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    /// Constant gain `sqrt(mean_power)`.
    Static,
    /// Complex Gaussian process low-pass filtered to the Doppler bandwidth.
    #[default]
    Rayleigh,
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay in samples before `delay_scale` is applied.
    pub delay: f64,
    pub mean_power: f64,
    pub doppler_hz: f64,
    pub fading: Fading,
}

impl Tap {
    pub fn direct() -> Self {
        Self {
            delay: 0.0,
            mean_power: 1.0,
            doppler_hz: 0.0,
            fading: Fading::Static,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Signal-to-noise ratio per sample. `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub taps: Vec<Tap>,
    pub delay_scale: f64,
    pub rng_seed: u64,
    /// Propagation delay `ρ` in samples.
    pub bulk_delay: usize,
    pub sample_rate_hz: f64,
    /// Signal power the SNR refers to. `None` measures the input.
    pub reference_power: Option<f64>,
    /// Fallback reference for an all-zero input.
    pub nominal_power: f64,
    /// Longest scaled tap delay accepted, in samples.
    pub max_delay: usize,
    /// Length of the channel's delay buffer. Echoes delayed further never
    /// reach the receiver. `None` keeps every tap.
    pub horizon: Option<usize>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            taps: vec![Tap::direct()],
            delay_scale: 1.0,
            rng_seed: 0,
            bulk_delay: 0,
            sample_rate_hz: 64_000.0,
            reference_power: None,
            nominal_power: 1.0,
            max_delay: 1 << 16,
            horizon: None,
        }
    }
}

impl ChannelConfig {
    /// Three Rayleigh taps at 0, 5 and 12 samples with powers 1, 0.5, 0.25
    /// and Doppler 0, 30, 60 Hz.
    pub fn desk_profile() -> Self {
        let tap = |delay, mean_power, doppler_hz| Tap {
            delay,
            mean_power,
            doppler_hz,
            fading: Fading::Rayleigh,
        };
        Self {
            taps: vec![tap(0.0, 1.0, 0.0), tap(5.0, 0.5, 30.0), tap(12.0, 0.25, 60.0)],
            ..Self::default()
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("snr_db = {} is not usable", self.snr_db)));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if !(self.delay_scale.is_finite() && self.delay_scale >= 0.0) {
            return Err(Error::Config(format!("delay scale {} is invalid", self.delay_scale)));
        }
        if !(self.nominal_power.is_finite() && self.nominal_power > 0.0) {
            return Err(Error::Config("nominal power must be positive".into()));
        }
        if let Some(p) = self.reference_power {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Config(format!("reference power {p} must be positive")));
            }
        }
        let first = self
            .taps
            .first()
            .ok_or_else(|| Error::Config("at least one tap is required".into()))?;
        if first.delay != 0.0 {
            return Err(Error::Config("first tap must have zero delay".into()));
        }
        for (t, tap) in self.taps.iter().enumerate() {
            if !(tap.delay.is_finite() && tap.delay >= 0.0) {
                return Err(Error::Config(format!("tap {t} delay {} is invalid", tap.delay)));
            }
            if !(tap.mean_power.is_finite() && tap.mean_power > 0.0) {
                return Err(Error::Config(format!("tap {t} power {} must be positive", tap.mean_power)));
            }
            if !tap.doppler_hz.is_finite() {
                return Err(Error::NonFinite(tap.doppler_hz));
            }
            let d = self.scaled_delay(t);
            if d > self.max_delay {
                return Err(Error::Config(format!(
                    "tap {t} delay of {d} samples exceeds the {}-sample buffer",
                    self.max_delay
                )));
            }
        }
        Ok(())
    }

    /// Whether tap `t` arrives within the channel buffer.
    pub fn tap_active(&self, t: usize) -> bool {
        self.horizon.is_none_or(|h| self.scaled_delay(t) <= h)
    }

    /// Delay of tap `t` in whole samples after scaling.
    pub fn scaled_delay(&self, t: usize) -> usize {
        (self.taps[t].delay * self.delay_scale).round() as usize
    }

    /// Noise variance per sample for an input of power `signal_power`.
    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        let p = match self.reference_power {
            Some(p) => p,
            None if signal_power > 0.0 => signal_power,
            None => self.nominal_power,
        };
        p / 10f64.powf(self.snr_db / 10.0)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        rng
    }
}

/// Adds white Gaussian noise at `cfg.snr_db`.
pub fn awgn(s: &[f64], cfg: &ChannelConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.snr_db == f64::INFINITY {
        return Ok(s.to_vec());
    }
    let power = if s.is_empty() {
        0.0
    } else {
        s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64
    };
    let sigma = cfg.noise_variance(power).sqrt();
    let mut rng = cfg.rng(NOISE_STREAM);
    Ok(s.iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x + sigma * z
        })
        .collect())
}

/// Prepends `rho` zero samples.
pub fn delay(s: &[f64], rho: usize) -> Vec<f64> {
    let mut out = vec![0.0; rho];
    out.extend_from_slice(s);
    out
}

/// Complex gain of tap `t` for the first `len` samples, Doppler rotation
/// included.
pub fn tap_gains(cfg: &ChannelConfig, t: usize, len: usize) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let tap = cfg.taps.get(t).ok_or_else(|| Error::Config(format!("no tap {t}")))?;
    let mut gains = match tap.fading {
        Fading::Static => vec![Complex64::new(tap.mean_power.sqrt(), 0.0); len],
        Fading::Rayleigh => rayleigh_process(cfg, t, len),
    };
    if tap.doppler_hz != 0.0 {
        let w = TAU * tap.doppler_hz / cfg.sample_rate_hz;
        for (n, g) in gains.iter_mut().enumerate() {
            *g *= Complex64::from_polar(1.0, w * n as f64);
        }
    }
    Ok(gains)
}

// First-order low-pass (AR(1)) complex Gaussian, stationary from n = 0.
fn rayleigh_process(cfg: &ChannelConfig, t: usize, len: usize) -> Vec<Complex64> {
    let tap = cfg.taps[t];
    let mut rng = cfg.rng(TAP_STREAM_BASE + t as u64);
    let sd = (tap.mean_power / 2.0).sqrt();
    let mut draw = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(sd * re, sd * im)
    };
    let rho = (-TAU * tap.doppler_hz.abs() / cfg.sample_rate_hz).exp();
    let innovation = (1.0 - rho * rho).sqrt();
    let mut h = draw();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(h);
        if innovation > 0.0 {
            h = h * rho + draw() * innovation;
        }
    }
    out
}

/// Analytic signal `s + j·H{s}` via the FFT.
pub fn analytic_signal(s: &[f64]) -> Vec<Complex64> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_fft(n).process(&mut buf);
    let half = n.div_ceil(2);
    for x in &mut buf[1..half] {
        *x *= 2.0;
    }
    for x in &mut buf[n / 2 + 1..] {
        *x = Complex64::new(0.0, 0.0);
    }
    inverse_fft(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    buf
}

/// Sums delayed, faded copies of `s`. The output keeps the input length.
pub fn multipath(s: &[f64], cfg: &ChannelConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let len = s.len();
    let mut out = vec![0.0; len];
    let real_only = cfg
        .taps
        .iter()
        .all(|t| t.fading == Fading::Static && t.doppler_hz == 0.0);
    if real_only {
        for (t, tap) in cfg.taps.iter().enumerate().filter(|(t, _)| cfg.tap_active(*t)) {
            let d = cfg.scaled_delay(t);
            let g = tap.mean_power.sqrt();
            for n in d..len {
                out[n] += g * s[n - d];
            }
        }
        return Ok(out);
    }
    let a = analytic_signal(s);
    for t in (0..cfg.taps.len()).filter(|&t| cfg.tap_active(t)) {
        let d = cfg.scaled_delay(t);
        let gains = tap_gains(cfg, t, len)?;
        for n in d..len {
            out[n] += (gains[n] * a[n - d]).re;
        }
    }
    Ok(out)
}

/// Bulk delay, then multipath, then noise.
pub fn apply(s: &[f64], cfg: &ChannelConfig) -> Result<Vec<f64>> {
    let delayed = delay(s, cfg.bulk_delay);
    awgn(&multipath(&delayed, cfg)?, cfg)
}
