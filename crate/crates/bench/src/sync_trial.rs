//! Synchronization trials with a known injected delay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vpsc::channel::{awgn, delay, ChannelConfig};
use vpsc::cipher::encrypt_frame;
use vpsc::modem::{modulate_symbol, QamSymbol};
use vpsc::sync::{infer_epsilon_with, CaptureBuffer, CaptureFile, SyncOptions};
use vpsc::{CipherConfig, Error};

use crate::link::Link;
use crate::spec::ExperimentSpec;
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncTrialRecord {
    pub seed: u64,
    /// Per-sample SNR in dB.
    pub snr_db: f64,
    /// `None` for a replayed capture.
    pub injected_samples: Option<usize>,
    pub correct_secret: bool,
    pub synced: bool,
    pub inferred_samples: Option<f64>,
    pub error_samples: Option<f64>,
    /// Averaged peak over the detection threshold.
    pub peak_margin: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct SyncTrialReport {
    pub records: Vec<SyncTrialRecord>,
}

impl SyncTrialReport {
    /// Trials run with the right secret that failed or missed by more than
    /// `tolerance` samples.
    pub fn misses(&self, tolerance: f64) -> Vec<&SyncTrialRecord> {
        self.records
            .iter()
            .filter(|r| r.correct_secret)
            .filter(|r| !r.synced || r.error_samples.is_some_and(|e| e.abs() > tolerance))
            .collect()
    }

    pub fn wrong_secret_failure_rate(&self) -> Option<f64> {
        let wrong: Vec<_> = self.records.iter().filter(|r| !r.correct_secret).collect();
        if wrong.is_empty() {
            return None;
        }
        Some(wrong.iter().filter(|r| !r.synced).count() as f64 / wrong.len() as f64)
    }
}

/// Runs every (seed, SNR, delay) combination with the right secret, then
/// `sync.wrong_seed_trials` trials with a wrong one. A failed inference is
/// recorded, not returned.
pub fn run_sync_trial(spec: &ExperimentSpec) -> Result<SyncTrialReport> {
    spec.validate()?;
    let link = Link::new(spec)?;
    let mut report = SyncTrialReport::default();

    if let Some(path) = &spec.sync.capture_path {
        let file = CaptureFile::load(path)?;
        if file.frame_len as usize != link.n || file.sample_rate != link.modem.sample_rate_hz {
            return Err(BenchError::Spec(format!(
                "capture {} does not match the configured modem",
                path.display()
            )));
        }
        let head = capture_head(spec, &link);
        let buffer = CaptureBuffer::from_capture(file, head)?;
        let cipher = link.vpsc_config(spec, 0.0)?;
        report
            .records
            .push(infer(spec, &link, &link, &cipher, &buffer, spec.seeds[0], f64::NAN, None, true)?);
        return Ok(report);
    }

    for &seed in &spec.seeds {
        for &snr_db in &spec.snr_db {
            for &rho in &spec.sync.delays {
                let (buffer, cipher) = simulate(spec, &link, rho, snr_db, seed)?;
                if spec.sync.write_captures {
                    write_capture(spec, &link, &buffer, seed, rho, snr_db)?;
                }
                report
                    .records
                    .push(infer(spec, &link, &link, &cipher, &buffer, seed, snr_db, Some(rho), true)?);
            }
        }
    }

    let secret = spec.secret()?;
    for t in 0..spec.sync.wrong_seed_trials {
        let seed = spec.seeds[0].wrapping_add(1_000 + t as u64);
        let rho = spec.sync.delays[t % spec.sync.delays.len()];
        let snr_db = spec.snr_db[0];
        let (buffer, cipher) = simulate(spec, &link, rho, snr_db, seed)?;
        let mut wrong = secret.clone();
        wrong.extend_from_slice(b"/wrong/");
        wrong.extend_from_slice(&(t as u64).to_le_bytes());
        let receiver = Link::with_secret(spec, wrong)?;
        report
            .records
            .push(infer(spec, &link, &receiver, &cipher, &buffer, seed, snr_db, Some(rho), false)?);
    }
    Ok(report)
}

fn capture_head(spec: &ExperimentSpec, link: &Link) -> f64 {
    (spec.sync.capture_frame as usize * link.n) as f64 / link.modem.sample_rate_hz
}

/// Encrypted random symbols delayed by `rho` samples, captured from frame
/// `sync.capture_frame` of the receiver clock.
fn simulate(
    spec: &ExperimentSpec,
    link: &Link,
    rho: usize,
    snr_db: f64,
    seed: u64,
) -> Result<(CaptureBuffer, CipherConfig)> {
    let n = link.n;
    let first = spec.sync.capture_frame as usize;
    let frames = first + spec.sync.buffer_frames + rho.div_ceil(n) + 1;
    let cipher = link.vpsc_config(spec, link.sample_sigma(snr_db))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tx = Vec::with_capacity(frames * n);
    for f in 0..frames {
        let plain = modulate_symbol(QamSymbol::from_index(rng.random_range(0..16)), &link.modem)?;
        let key = link.stream.key_frame(f as u64, n, cipher.phi_effective())?;
        tx.extend(encrypt_frame(&plain, &key, &cipher)?.into_samples());
    }
    let channel = ChannelConfig {
        snr_db,
        rng_seed: rng.random(),
        sample_rate_hz: link.modem.sample_rate_hz,
        reference_power: Some(link.nominal_power),
        nominal_power: link.nominal_power,
        ..ChannelConfig::default()
    };
    let rx = awgn(&delay(&tx, rho), &channel)?;
    let start = first * n;
    let buffer = CaptureBuffer::new(
        rx[start..start + spec.sync.buffer_frames * n].to_vec(),
        capture_head(spec, link),
        link.modem.sample_rate_hz,
    )?;
    Ok((buffer, cipher))
}

#[allow(clippy::too_many_arguments)]
fn infer(
    spec: &ExperimentSpec,
    link: &Link,
    receiver: &Link,
    cipher: &CipherConfig,
    buffer: &CaptureBuffer,
    seed: u64,
    snr_db: f64,
    injected: Option<usize>,
    correct_secret: bool,
) -> Result<SyncTrialRecord> {
    let opts = SyncOptions {
        n_keys: spec.sync.n_keys,
        ..SyncOptions::default()
    };
    let fs = link.modem.sample_rate_hz;
    let mut record = SyncTrialRecord {
        seed,
        snr_db,
        injected_samples: injected,
        correct_secret,
        synced: false,
        inferred_samples: None,
        error_samples: None,
        peak_margin: None,
        message: String::new(),
    };
    match infer_epsilon_with(buffer, &receiver.sync, cipher, &opts) {
        Ok(r) => {
            let inferred = r.epsilon * fs;
            record.synced = true;
            record.inferred_samples = Some(inferred);
            record.error_samples = injected.map(|rho| inferred - rho as f64);
            record.peak_margin = Some(r.peak / r.threshold);
        }
        Err(Error::SyncFailure(msg)) => record.message = msg,
        Err(e) => return Err(e.into()),
    }
    Ok(record)
}

fn write_capture(
    spec: &ExperimentSpec,
    link: &Link,
    buffer: &CaptureBuffer,
    seed: u64,
    rho: usize,
    snr_db: f64,
) -> Result<()> {
    std::fs::create_dir_all(&spec.output)?;
    let name = format!("capture_seed{seed}_delay{rho}_snr{snr_db}.bin");
    CaptureFile {
        frame_len: link.n as u32,
        sample_rate: link.modem.sample_rate_hz,
        samples: buffer.samples().to_vec(),
    }
    .save(spec.output.join(name))?;
    Ok(())
}
