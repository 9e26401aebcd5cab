//! Receiver-side frame synchronization.
//!
//! A receiver that joins a stream mid-flight knows the shared
//! [`SyncConfig`] but not its own clock offset `ε`, which lumps together
//! clock drift and the propagation delay. The search below decrypts every
//! `N`-sample window of a capture with keys for frames near the middle of
//! the capture and scores each attempt with a whiteness metric: wrong keys
//! or misaligned windows produce noise, the right pairing produces
//! structured plaintext. The per-key traces are aligned on their expected
//! frame starts and averaged before the peak is picked.
//!
//! `ε` is positive when the signal arrives late. The corrected counter at
//! receiver time `t` is `current_counter(cfg, t, -ε)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::cipher::{decrypt_spectrum, CipherConfig};
use crate::error::{Error, Result};
use crate::keystream::{elapsed_counters, KeyFrame, Keystream, SyncConfig};
use crate::spectral::{analyze, forward_fft, inverse_fft, synthesize, SignalFrame};

/// How the autocorrelation lags are folded into a single score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaVariant {
    /// `Σ R[k] / R[0]` over lags `1..N`. Signed terms can cancel.
    Raw,
    /// `Σ |R[k]| / R[0]`.
    Absolute,
    /// Mean of `(R[k] / R[0])²`: the share of autocorrelation energy off
    /// the zero lag.
    #[default]
    Energy,
}

/// Linear (non-circular) autocorrelation `R[k] = Σ x[n]·x[n+k]` for
/// `k = 0..len`.
pub fn autocorrelation(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    forward_fft(m).process(&mut buf);
    for b in &mut buf {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    inverse_fft(m).process(&mut buf);
    buf[..n].iter().map(|c| c.re / m as f64).collect()
}

/// Whiteness score of a frame using the default [`AlphaVariant::Energy`].
/// Small values mean noise-like.
pub fn whiteness_metric(frame: &SignalFrame) -> Result<f64> {
    whiteness_metric_with(frame, AlphaVariant::default())
}

pub fn whiteness_metric_with(frame: &SignalFrame, variant: AlphaVariant) -> Result<f64> {
    alpha(frame.samples(), variant)
}

fn alpha(x: &[f64], variant: AlphaVariant) -> Result<f64> {
    let r = autocorrelation(x);
    let r0 = r.first().copied().unwrap_or(0.0);
    if r0 <= 0.0 || x.iter().all(|&v| v == 0.0) {
        return Err(Error::UndefinedMetric);
    }
    let lags = r[1..].iter().map(|v| v / r0);
    Ok(match variant {
        AlphaVariant::Raw => lags.sum(),
        AlphaVariant::Absolute => lags.map(f64::abs).sum(),
        AlphaVariant::Energy => lags.map(|v| v * v).sum::<f64>() / (x.len() - 1).max(1) as f64,
    })
}

/// Received samples with the receiver timestamp of the first one.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureBuffer {
    samples: Vec<f64>,
    t_rx_head: f64,
    sample_rate: f64,
}

impl CaptureBuffer {
    pub fn new(samples: Vec<f64>, t_rx_head: f64, sample_rate: f64) -> Result<Self> {
        if !t_rx_head.is_finite() {
            return Err(Error::NonFinite(t_rx_head));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Config(format!("sample rate {sample_rate} must be positive")));
        }
        Ok(Self {
            samples,
            t_rx_head,
            sample_rate,
        })
    }

    pub fn from_capture(file: CaptureFile, t_rx_head: f64) -> Result<Self> {
        Self::new(file.samples, t_rx_head, file.sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn t_rx_head(&self) -> f64 {
        self.t_rx_head
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
}

/// Whiteness scores of every window shift, one trace per trial key.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTrace {
    pub key_frames: Vec<u64>,
    /// `traces[j][w]` scores the window starting at sample `w` decrypted
    /// with key `key_frames[j]`.
    pub traces: Vec<Vec<f64>>,
    /// Sample index where each key's frame starts if `ε = 0`.
    pub expected_starts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncOptions {
    pub n_keys: usize,
    pub variant: AlphaVariant,
    /// Peak must exceed the background mean by this many deviations.
    pub threshold_sigmas: f64,
    /// Half-width, in samples, of the region around the peak left out of
    /// the background statistics. `None` uses `N / 8`.
    pub exclusion: Option<usize>,
}

impl Default for SyncOptions {
    fn default() -> Self {
        Self {
            n_keys: 8,
            variant: AlphaVariant::default(),
            threshold_sigmas: 6.0,
            exclusion: None,
        }
    }
}

/// Outcome of a successful search.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    /// Inferred offset in seconds.
    pub epsilon: f64,
    /// Averaged trace indexed by offset from the expected frame starts;
    /// `averaged[i]` belongs to offset `first_offset + i`.
    pub averaged: Vec<f64>,
    pub first_offset: isize,
    /// Offset of the peak, in samples.
    pub peak_offset: isize,
    pub peak: f64,
    pub threshold: f64,
    pub background: PeakStats,
    pub trace: MetricTrace,
}

/// Peak location and off-peak statistics of one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakStats {
    pub index: usize,
    pub value: f64,
    pub mean: f64,
    pub std: f64,
}

impl PeakStats {
    /// How far the peak stands above the background, in deviations.
    pub fn ratio(&self) -> f64 {
        if self.std > 0.0 {
            (self.value - self.mean) / self.std
        } else {
            f64::INFINITY
        }
    }
}

/// Argmax of `trace` with mean and deviation of everything further than
/// `exclusion` samples from it.
pub fn peak_stats(trace: &[f64], exclusion: usize) -> Option<PeakStats> {
    let (index, &value) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let off: Vec<f64> = trace
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(index) > exclusion)
        .map(|(_, &v)| v)
        .collect();
    if off.len() < 2 {
        return None;
    }
    let mean = off.iter().sum::<f64>() / off.len() as f64;
    let var = off.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (off.len() - 1) as f64;
    Some(PeakStats {
        index,
        value,
        mean,
        std: var.sqrt(),
    })
}

/// Decrypts every window of the capture with keys for the `n_keys` frames
/// around its middle and scores each attempt.
pub fn scan(
    buffer: &CaptureBuffer,
    sync_cfg: &SyncConfig,
    cipher_cfg: &CipherConfig,
    opts: &SyncOptions,
) -> Result<MetricTrace> {
    cipher_cfg.validate()?;
    sync_cfg.validate()?;
    let n = cipher_cfg.n;
    let len = buffer.len();
    if len < 3 * n {
        return Err(Error::Config(format!(
            "capture of {len} samples is shorter than three frames of {n}"
        )));
    }
    if opts.n_keys == 0 {
        return Err(Error::Config("at least one trial key is required".into()));
    }
    let fs = buffer.sample_rate;
    let u = sync_cfg.counters_per_frame;
    let t_mid = buffer.t_rx_head + (len / 2) as f64 / fs;
    let mid_frame = (elapsed_counters(sync_cfg, t_mid)? / u128::from(u)) as u64;
    let first = mid_frame.saturating_sub(opts.n_keys as u64 / 2);
    let key_frames: Vec<u64> = (first..first + opts.n_keys as u64).collect();

    let stream = Keystream::new(sync_cfg)?;
    let phi = cipher_cfg.phi_effective();
    let keys: Vec<KeyFrame> = key_frames
        .iter()
        .map(|&f| stream.key_frame(f, n, phi))
        .collect::<Result<_>>()?;
    let expected_starts = key_frames
        .iter()
        .map(|&f| {
            let t_start = sync_cfg.start_time + (f as f64 * u as f64) / sync_cfg.rate;
            (t_start - buffer.t_rx_head) * fs
        })
        .collect();

    let windows = len - n + 1;
    let per_window: Vec<Vec<f64>> = (0..windows)
        .into_par_iter()
        .map(|w| {
            let frame = SignalFrame::new(buffer.samples[w..w + n].to_vec())?;
            let spectrum = analyze(&frame);
            keys.iter()
                .map(|k| {
                    let plain = synthesize(&decrypt_spectrum(&spectrum, k, cipher_cfg)?)?;
                    // A window that decrypts to silence carries no structure.
                    Ok(alpha(plain.samples(), opts.variant).unwrap_or(0.0))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let traces = (0..keys.len())
        .map(|j| per_window.iter().map(|row| row[j]).collect())
        .collect();
    Ok(MetricTrace {
        key_frames,
        traces,
        expected_starts,
    })
}

/// Infers the receiver's offset `ε` in seconds with default options.
pub fn infer_epsilon(
    buffer: &CaptureBuffer,
    sync_cfg: &SyncConfig,
    cipher_cfg: &CipherConfig,
    n_keys: usize,
) -> Result<f64> {
    let opts = SyncOptions {
        n_keys,
        ..SyncOptions::default()
    };
    Ok(infer_epsilon_with(buffer, sync_cfg, cipher_cfg, &opts)?.epsilon)
}

pub fn infer_epsilon_with(
    buffer: &CaptureBuffer,
    sync_cfg: &SyncConfig,
    cipher_cfg: &CipherConfig,
    opts: &SyncOptions,
) -> Result<SyncReport> {
    let trace = scan(buffer, sync_cfg, cipher_cfg, opts)?;
    let windows = (buffer.len() - cipher_cfg.n + 1) as isize;
    let rounded: Vec<isize> = trace
        .expected_starts
        .iter()
        .map(|e| e.round() as isize)
        .collect();
    // Offsets at which every key's trace has a window.
    let lo = rounded.iter().map(|&o| -o).max().unwrap_or(0);
    let hi = rounded.iter().map(|&o| windows - 1 - o).min().unwrap_or(-1);
    if lo > hi {
        return Err(Error::Config(
            "capture is too short to hold every trial key's frame".into(),
        ));
    }
    let averaged: Vec<f64> = (lo..=hi)
        .map(|d| {
            trace
                .traces
                .iter()
                .zip(&rounded)
                .map(|(t, &o)| t[(o + d) as usize])
                .sum::<f64>()
                / trace.traces.len() as f64
        })
        .collect();

    let exclusion = opts.exclusion.unwrap_or(cipher_cfg.n / 8);
    let stats = peak_stats(&averaged, exclusion).ok_or_else(|| {
        Error::SyncFailure("search range too narrow for background statistics".into())
    })?;
    let threshold = stats.mean + opts.threshold_sigmas * stats.std;
    if stats.value <= threshold {
        return Err(Error::SyncFailure(format!(
            "peak {:.3e} does not clear threshold {:.3e}",
            stats.value, threshold
        )));
    }
    let peak_offset = lo + stats.index as isize;
    // Found frame start minus expected start, averaged over keys so the
    // rounding of each expected start cancels.
    let shift = trace
        .expected_starts
        .iter()
        .zip(&rounded)
        .map(|(e, &o)| (o + peak_offset) as f64 - e)
        .sum::<f64>()
        / rounded.len() as f64;
    Ok(SyncReport {
        epsilon: shift / buffer.sample_rate,
        averaged,
        first_offset: lo,
        peak_offset,
        peak: stats.value,
        threshold,
        background: stats,
        trace,
    })
}

const CAPTURE_MAGIC: &[u8; 4] = b"VPSC";
const CAPTURE_VERSION: u32 = 1;
/// Size of the capture header in bytes.
pub const CAPTURE_HEADER_LEN: usize = 32;

/// Raw capture: a 32-byte little-endian header (magic `VPSC`, version,
/// frame length, reserved word, sample rate as `f64`, sample count as
/// `u64`) followed by the samples as little-endian `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFile {
    pub frame_len: u32,
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

fn io_err(e: std::io::Error) -> Error {
    Error::Capture(e.to_string())
}

impl CaptureFile {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; CAPTURE_HEADER_LEN];
        header[0..4].copy_from_slice(CAPTURE_MAGIC);
        header[4..8].copy_from_slice(&CAPTURE_VERSION.to_le_bytes());
        header[8..12].copy_from_slice(&self.frame_len.to_le_bytes());
        header[16..24].copy_from_slice(&self.sample_rate.to_le_bytes());
        header[24..32].copy_from_slice(&(self.samples.len() as u64).to_le_bytes());
        w.write_all(&header).map_err(io_err)?;
        for x in &self.samples {
            w.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; CAPTURE_HEADER_LEN];
        r.read_exact(&mut header).map_err(io_err)?;
        if &header[0..4] != CAPTURE_MAGIC {
            return Err(Error::Capture("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != CAPTURE_VERSION {
            return Err(Error::Capture(format!("unsupported version {version}")));
        }
        let frame_len = word(8);
        let sample_rate = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let count = u64::from_le_bytes(header[24..32].try_into().unwrap());
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io_err)?;
        if bytes.len() as u64 != count * 8 {
            return Err(Error::Capture(format!(
                "header announces {count} samples, body holds {} bytes",
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            frame_len,
            sample_rate,
            samples,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path).map_err(io_err)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path).map_err(io_err)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn brute_autocorrelation(x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| (0..x.len() - k).map(|n| x[n] * x[n + k]).sum())
            .collect()
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        for (a, b) in autocorrelation(&x).iter().zip(brute_autocorrelation(&x)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_frame() {
        let f = SignalFrame::new(vec![0.7; 256]).unwrap();
        let raw = whiteness_metric_with(&f, AlphaVariant::Raw).unwrap();
        assert!((raw - 255.0 / 2.0).abs() < 1e-9);
        let r = brute_autocorrelation(f.samples());
        let energy = r[1..].iter().map(|v| (v / r[0]).powi(2)).sum::<f64>() / 255.0;
        assert!((whiteness_metric(&f).unwrap() - energy).abs() < 1e-12);
    }

    #[test]
    fn zero_frame_is_undefined() {
        let f = SignalFrame::zeros(64).unwrap();
        assert_eq!(whiteness_metric(&f), Err(Error::UndefinedMetric));
    }

    #[test]
    fn tone_scores_high() {
        let tone = SignalFrame::new((0..256).map(|n| (TAU * 8.0 * n as f64 / 256.0).cos()).collect()).unwrap();
        assert!(whiteness_metric(&tone).unwrap() > 0.15);
    }

    #[test]
    fn peak_statistics() {
        let mut t = vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        t[4] = 10.0;
        let s = peak_stats(&t, 1).unwrap();
        assert_eq!(s.index, 4);
        assert_eq!(s.value, 10.0);
        assert!((s.mean - 1.4).abs() < 1e-12);
        assert!(peak_stats(&t, 8).is_none());
    }

    #[test]
    fn capture_round_trip() {
        let file = CaptureFile {
            frame_len: 256,
            sample_rate: 64_000.0,
            samples: vec![1.5, -2.25, 0.0, f64::MIN_POSITIVE],
        };
        let mut bytes = Vec::new();
        file.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), CAPTURE_HEADER_LEN + 4 * 8);
        assert_eq!(&bytes[..4], b"VPSC");
        assert_eq!(CaptureFile::read_from(bytes.as_slice()).unwrap(), file);
        bytes.pop();
        assert!(CaptureFile::read_from(bytes.as_slice()).is_err());
        bytes[0] = b'X';
        assert!(CaptureFile::read_from(bytes.as_slice()).is_err());
    }

    #[test]
    fn short_capture_is_rejected() {
        let cfg = SyncConfig::for_stream(64, 1000.0, b"s".to_vec());
        let cipher = CipherConfig::new(64, 10.0).unwrap();
        let buf = CaptureBuffer::new(vec![0.0; 150], 1.0, 1000.0).unwrap();
        assert!(matches!(
            infer_epsilon(&buf, &cfg, &cipher, 8),
            Err(Error::Config(_))
        ));
    }
}
