//! Ciphertext autocorrelation under several independent keys.
//!
//! VPSC runs with its keystream over the whole spectrum. FCS and ALM are
//! keyed once per encryption, as a fixed permutation or fixed factors, and
//! RSA uses one key pair per encryption.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vpsc::baseline::{AlmKey, FcsKey};
use vpsc::modem::{modulate_symbol, QamSymbol};
use vpsc::sync::autocorrelation;
use vpsc::SignalFrame;

use crate::link::{FrameCipher, Link};
use crate::spec::{CipherKind, ExperimentSpec};
use crate::Result;

/// Normalized autocorrelation at one lag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrTrace {
    pub cipher: CipherKind,
    pub input: &'static str,
    pub key_index: usize,
    pub lag: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrRecord {
    pub cipher: CipherKind,
    pub input: &'static str,
    pub key_index: usize,
    /// Largest `|R[k]/R[0]|` over `1..=max_lag`.
    pub max_off_peak: f64,
    pub max_off_peak_lag: usize,
    /// Lag of the largest positive `R[k]/R[0]` over `2..=max_lag`, the
    /// dominant period.
    pub period_lag: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AutocorrReport {
    pub records: Vec<AutocorrRecord>,
    pub traces: Vec<AutocorrTrace>,
}

impl AutocorrReport {
    pub fn records_for(&self, cipher: CipherKind, input: &str) -> Vec<&AutocorrRecord> {
        self.records
            .iter()
            .filter(|r| r.cipher == cipher && r.input == input)
            .collect()
    }
}

/// `R[k]/R[0]` of the mean-removed signal for `k = 0..=max_lag`.
pub fn normalized_autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r = autocorrelation(&centered);
    let r0 = r[0];
    r.iter()
        .take(max_lag + 1)
        .map(|v| if r0 > 0.0 { v / r0 } else { 0.0 })
        .collect()
}

/// Encrypts a fixed 16-QAM stream, and a sine for RSA, under
/// `autocorr.keys` keys per cipher.
pub fn run_autocorrelation_analysis(spec: &ExperimentSpec) -> Result<AutocorrReport> {
    spec.validate()?;
    let a = &spec.autocorr;
    let mut full = spec.clone();
    full.vpsc.full_band = true;
    let base = Link::new(&full)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seeds[0]);
    let qam = (0..a.frames)
        .map(|_| modulate_symbol(QamSymbol::from_index(rng.random_range(0..16)), &base.modem))
        .collect::<vpsc::Result<Vec<_>>>()?;
    let sine = sine_frames(base.n, a.frames, a.sine_period)?;

    let mut report = AutocorrReport::default();
    record(&mut report, CipherKind::None, "qam", 0, &qam, a.max_lag);
    record(&mut report, CipherKind::None, "sine", 0, &sine, a.max_lag);
    let secret = full.secret()?;
    for key_index in 0..a.keys {
        let mut keyed = secret.clone();
        keyed.extend_from_slice(&(key_index as u64).to_le_bytes());
        let link = Link::with_secret(&full, keyed)?;
        let mut key_rng = ChaCha8Rng::seed_from_u64(spec.seeds[0]);
        key_rng.set_stream(key_index as u64 + 1);
        for kind in [CipherKind::Vpsc, CipherKind::Fcs, CipherKind::Alm, CipherKind::Rsa] {
            let cipher = match link.cipher(kind, &full, 0.0, &mut key_rng)? {
                FrameCipher::Fcs(_) => FrameCipher::Fcs(Some(FcsKey::generate(&link.stream, 0, &link.mask)?)),
                FrameCipher::Alm(_) => FrameCipher::Alm(Some(AlmKey::generate(
                    &link.stream,
                    0,
                    link.n,
                    link.sample_low,
                    link.sample_high,
                )?)),
                c => c,
            };
            let inputs: &[(&'static str, &[SignalFrame])] = if kind == CipherKind::Rsa {
                &[("qam", &qam), ("sine", &sine)]
            } else {
                &[("qam", &qam)]
            };
            for &(input, frames) in inputs {
                let encrypted = frames
                    .iter()
                    .enumerate()
                    .map(|(f, s)| cipher.encrypt(&link, f as u64, s))
                    .collect::<Result<Vec<_>>>()?;
                record(&mut report, kind, input, key_index, &encrypted, a.max_lag);
            }
        }
    }
    Ok(report)
}

fn sine_frames(n: usize, frames: usize, period: usize) -> Result<Vec<SignalFrame>> {
    (0..frames)
        .map(|f| {
            let samples = (0..n)
                .map(|k| {
                    let t = (f * n + k) as f64;
                    3.0 * (TAU * t / period as f64 + 0.1).sin()
                })
                .collect();
            Ok(SignalFrame::new(samples)?)
        })
        .collect()
}

fn record(
    report: &mut AutocorrReport,
    cipher: CipherKind,
    input: &'static str,
    key_index: usize,
    frames: &[SignalFrame],
    max_lag: usize,
) {
    let stream: Vec<f64> = frames.iter().flat_map(|f| f.samples().iter().copied()).collect();
    let r = normalized_autocorrelation(&stream, max_lag.min(stream.len() - 1));
    let (max_off_peak_lag, max_off_peak) = r
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| (k, v.abs()))
        .fold((0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
    let period_lag = r
        .iter()
        .enumerate()
        .skip(2)
        .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
        .0;
    report.records.push(AutocorrRecord {
        cipher,
        input,
        key_index,
        max_off_peak,
        max_off_peak_lag,
        period_lag,
    });
    report.traces.extend(r.iter().enumerate().map(|(lag, &r)| AutocorrTrace {
        cipher,
        input,
        key_index,
        lag,
        r,
    }));
}
