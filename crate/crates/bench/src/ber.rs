//! Monte Carlo bit error rate over the modem, cipher and channel.
//!
//! Every symbol is modulated onto its own frame, encrypted, and the whole
//! stream crosses the channel at once so echoes spill into later symbols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vpsc::channel::{self, ChannelConfig, Tap};
use vpsc::modem::{decide, modulate_symbol, soft_decision, QamSymbol};

use crate::link::Link;
use crate::spec::{CipherKind, ExperimentKind, ExperimentSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub cipher: CipherKind,
    pub snr_db: f64,
    pub delay_scale: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
}

impl BerRecord {
    fn new(cipher: CipherKind, snr_db: f64, delay_scale: f64, bit_errors: u64, bits_total: u64) -> Self {
        Self {
            cipher,
            snr_db,
            delay_scale,
            bit_errors,
            bits_total,
            ber: bit_errors as f64 / bits_total as f64,
        }
    }
}

/// One soft decision kept for constellation plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstellationPoint {
    pub cipher: CipherKind,
    pub snr_db: f64,
    pub delay_scale: f64,
    pub seed: u64,
    pub symbol: usize,
    pub tx_i: i8,
    pub tx_q: i8,
    pub rx_i: f64,
    pub rx_q: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, Default)]
pub struct BerReport {
    /// One record per (SNR, delay scale), summed over seeds.
    pub records: Vec<BerRecord>,
    pub constellation: Vec<ConstellationPoint>,
}

struct Point {
    snr_db: f64,
    delay_scale: f64,
    seed: u64,
    sweep_index: u64,
}

struct PointResult {
    bit_errors: u64,
    bits_total: u64,
    constellation: Vec<ConstellationPoint>,
}

/// Runs `spec.symbol_count` symbols through `spec.cipher` at every sweep
/// point.
///
/// Point `(snr_db[i], delay_scale[j])` draws from a generator seeded by
/// each seed in `spec.seeds` on stream `i·len(delay_scale) + j`, so the
/// result does not depend on the cipher or on thread scheduling.
pub fn run_ber_experiment(spec: &ExperimentSpec) -> Result<BerReport> {
    spec.validate()?;
    let link = Link::new(spec)?;
    let mut points = Vec::new();
    for (i, &snr_db) in spec.snr_db.iter().enumerate() {
        for (j, &delay_scale) in spec.delay_scale.iter().enumerate() {
            let sweep_index = (i * spec.delay_scale.len() + j) as u64;
            channel_config(spec, &link, snr_db, delay_scale, 0)?.validate()?;
            for &seed in &spec.seeds {
                points.push(Point {
                    snr_db,
                    delay_scale,
                    seed,
                    sweep_index,
                });
            }
        }
    }
    let results = points
        .par_iter()
        .map(|p| run_point(spec, &link, p))
        .collect::<Result<Vec<_>>>()?;

    let mut report = BerReport::default();
    for (chunk_points, chunk) in points.chunks(spec.seeds.len()).zip(results.chunks(spec.seeds.len())) {
        let p = &chunk_points[0];
        let errors = chunk.iter().map(|r| r.bit_errors).sum();
        let total = chunk.iter().map(|r| r.bits_total).sum();
        report
            .records
            .push(BerRecord::new(spec.cipher, p.snr_db, p.delay_scale, errors, total));
        for r in chunk {
            report.constellation.extend(r.constellation.iter().cloned());
        }
    }
    Ok(report)
}

fn multipath_enabled(spec: &ExperimentSpec) -> bool {
    spec.experiment == ExperimentKind::BerDelay || spec.channel.multipath
}

fn channel_config(
    spec: &ExperimentSpec,
    link: &Link,
    es_n0_db: f64,
    delay_scale: f64,
    rng_seed: u64,
) -> Result<ChannelConfig> {
    let taps = if multipath_enabled(spec) {
        spec.channel.taps.iter().map(|t| t.tap()).collect()
    } else {
        vec![Tap::direct()]
    };
    Ok(ChannelConfig {
        snr_db: link.per_sample_snr_db(es_n0_db),
        taps,
        delay_scale,
        rng_seed,
        bulk_delay: 0,
        sample_rate_hz: link.modem.sample_rate_hz,
        reference_power: Some(link.nominal_power),
        nominal_power: link.nominal_power,
        horizon: spec.channel.horizon,
        ..ChannelConfig::default()
    })
}

fn run_point(spec: &ExperimentSpec, link: &Link, p: &Point) -> Result<PointResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(p.sweep_index);
    let channel_seed: u64 = rng.random();
    let ch = channel_config(spec, link, p.snr_db, p.delay_scale, channel_seed)?;
    let sigma = link.sample_sigma(ch.snr_db);
    let cipher = link.cipher(spec.cipher, spec, sigma, &mut rng)?;

    let n = link.n;
    let symbols: Vec<QamSymbol> = (0..spec.symbol_count)
        .map(|_| QamSymbol::from_index(rng.random_range(0..16)))
        .collect();
    let mut tx = Vec::with_capacity(n * symbols.len());
    for (f, &s) in symbols.iter().enumerate() {
        let frame = modulate_symbol(s, &link.modem)?;
        tx.extend_from_slice(cipher.encrypt(link, f as u64, &frame)?.samples());
    }
    let rx = channel::apply(&tx, &ch)?;

    let mut bit_errors = 0;
    let mut constellation = Vec::new();
    for (f, &sent) in symbols.iter().enumerate() {
        let frame = vpsc::SignalFrame::new(rx[f * n..(f + 1) * n].to_vec())?;
        let plain = cipher.decrypt(link, f as u64, &frame)?;
        let (i, q) = soft_decision(plain.samples(), &link.modem);
        let got = QamSymbol::from_levels(decide(i), decide(q))?;
        let errors = sent.bits().iter().zip(got.bits()).filter(|(a, b)| **a != *b).count();
        bit_errors += errors as u64;
        if f < spec.constellation_points {
            constellation.push(ConstellationPoint {
                cipher: spec.cipher,
                snr_db: p.snr_db,
                delay_scale: p.delay_scale,
                seed: p.seed,
                symbol: f,
                tx_i: sent.i(),
                tx_q: sent.q(),
                rx_i: i,
                rx_q: q,
                correct: errors == 0,
            });
        }
    }
    Ok(PointResult {
        bit_errors,
        bits_total: 4 * symbols.len() as u64,
        constellation,
    })
}
