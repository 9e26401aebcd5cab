//! Frame-averaged power spectra of plaintext and ciphertexts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vpsc::modem::{modulate_symbol, QamSymbol};
use vpsc::{analyze, SignalFrame};

use crate::link::{FrameCipher, Link};
use crate::spec::{CipherKind, ExperimentSpec};
use crate::Result;

/// One-sided power at one bin, in units of mean sample power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdRow {
    pub signal: String,
    pub bin: usize,
    pub freq_hz: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub signal: String,
    pub in_band_power: f64,
    pub out_of_band_power: f64,
    /// Out-of-band share of the total power.
    pub out_of_band_fraction: f64,
    /// Mean bin magnitude over the band, excluding DC.
    pub mean_in_band_magnitude: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SpectrumReport {
    pub psd: Vec<PsdRow>,
    pub summaries: Vec<SpectrumSummary>,
    /// Mean magnitude a uniformly keyed VPSC bin should show.
    pub expected_vpsc_magnitude: f64,
}

impl SpectrumReport {
    pub fn summary(&self, signal: &str) -> Option<&SpectrumSummary> {
        self.summaries.iter().find(|s| s.signal == signal)
    }
}

/// Spectra of `spectrum.frames` random symbols, clean and under every
/// cipher. VPSC and FCS encrypt the configured band, the others the whole
/// frame.
pub fn run_spectrum_report(spec: &ExperimentSpec) -> Result<SpectrumReport> {
    spec.validate()?;
    let link = Link::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seeds[0]);
    let frames = (0..spec.spectrum.frames)
        .map(|_| modulate_symbol(QamSymbol::from_index(rng.random_range(0..16)), &link.modem))
        .collect::<vpsc::Result<Vec<_>>>()?;

    let mut report = SpectrumReport::default();
    let clean = measure(&link, "plaintext", &frames, &mut report.psd)?;
    report.summaries.push(clean);
    for kind in CipherKind::ALL.into_iter().filter(|k| *k != CipherKind::None) {
        let cipher = link.cipher(kind, spec, 0.0, &mut rng)?;
        if let FrameCipher::Vpsc(cfg) = &cipher {
            report.expected_vpsc_magnitude = cfg.phi_effective() / 2.0 + cfg.lambda;
        }
        let encrypted = frames
            .iter()
            .enumerate()
            .map(|(f, s)| cipher.encrypt(&link, f as u64, s))
            .collect::<Result<Vec<_>>>()?;
        let summary = measure(&link, kind.name(), &encrypted, &mut report.psd)?;
        report.summaries.push(summary);
    }
    Ok(report)
}

fn measure(link: &Link, signal: &str, frames: &[SignalFrame], psd: &mut Vec<PsdRow>) -> Result<SpectrumSummary> {
    let n = link.n;
    let half = n / 2;
    let mut power = vec![0.0; half + 1];
    let mut magnitude = vec![0.0; half + 1];
    for frame in frames {
        let spec = analyze(frame);
        for (k, &m) in spec.magnitudes()[..=half].iter().enumerate() {
            let weight = if k == 0 || k == half { 1.0 } else { 2.0 };
            power[k] += weight * m * m / (n * n) as f64;
            magnitude[k] += m;
        }
    }
    let count = frames.len() as f64;
    let (mut inside, mut outside) = (0.0, 0.0);
    let (mut mag_sum, mut mag_bins) = (0.0, 0usize);
    for k in 0..=half {
        power[k] /= count;
        if link.mask.contains(k) {
            inside += power[k];
            if k > 0 {
                mag_sum += magnitude[k] / count;
                mag_bins += 1;
            }
        } else {
            outside += power[k];
        }
        psd.push(PsdRow {
            signal: signal.to_string(),
            bin: k,
            freq_hz: k as f64 * link.modem.sample_rate_hz / n as f64,
            power: power[k],
        });
    }
    let total = inside + outside;
    Ok(SpectrumSummary {
        signal: signal.to_string(),
        in_band_power: inside,
        out_of_band_power: outside,
        out_of_band_fraction: if total > 0.0 { outside / total } else { 0.0 },
        mean_in_band_magnitude: if mag_bins > 0 { mag_sum / mag_bins as f64 } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_sums_to_sample_power() {
        let spec = ExperimentSpec {
            spectrum: crate::spec::SpectrumSection { frames: 8 },
            ..ExperimentSpec::default()
        };
        let report = run_spectrum_report(&spec).unwrap();
        assert_eq!(report.summaries.len(), 5);
        let link = Link::new(&spec).unwrap();
        let plain: f64 = report.psd.iter().filter(|r| r.signal == "plaintext").map(|r| r.power).sum();
        // Random 16-QAM symbols carry 5 on average; 8 frames land near it.
        assert!(plain > 1.0 && plain < 18.0 * link.modem.amplitude.powi(2) / 2.0 + 1e-9);
        let s = report.summary("plaintext").unwrap();
        assert!(s.out_of_band_fraction < 1e-20);
        assert!((s.in_band_power - plain).abs() < 1e-9 * plain);
    }
}
