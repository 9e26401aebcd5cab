//! Counter-addressable key generation.
//!
//! Key material comes from AES-256 in counter mode, keyed with the SHA-256
//! digest of the shared secret seed. Each 128-bit counter block yields
//! [`VALUES_PER_BLOCK`] little-endian 64-bit words, and each word maps to
//! `[0, 1)` through its top 53 bits. A key frame of length `N` therefore
//! consumes `ceil(N / VALUES_PER_BLOCK)` counters.

use std::f64::consts::{PI, TAU};
use std::fmt;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::{Aes256, Block};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{check_frame_len, wrap};

/// Uniform values produced per counter block (`r`).
pub const VALUES_PER_BLOCK: usize = 2;

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// Counters consumed by one key frame of length `n`.
pub fn counters_per_frame(n: usize) -> u64 {
    n.div_ceil(VALUES_PER_BLOCK) as u64
}

/// Shared synchronization parameters.
#[derive(Clone, PartialEq)]
pub struct SyncConfig {
    /// Generator counter at the start of the stream (`sc`).
    pub seed_counter: u64,
    /// Start of encryption on the transmitter clock, in seconds (`st`).
    pub start_time: f64,
    /// Counters consumed per second (`g`).
    pub rate: f64,
    /// Counter period (`P`).
    pub period: u64,
    /// Counters consumed per key frame (`u`).
    pub counters_per_frame: u64,
    pub secret_seed: Vec<u8>,
}

impl fmt::Debug for SyncConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyncConfig")
            .field("seed_counter", &self.seed_counter)
            .field("start_time", &self.start_time)
            .field("rate", &self.rate)
            .field("period", &self.period)
            .field("counters_per_frame", &self.counters_per_frame)
            .field("secret_seed", &"<redacted>")
            .finish()
    }
}

impl SyncConfig {
    /// Configuration for a stream of back-to-back frames of `n` samples at
    /// `sample_rate` Hz, starting at time zero.
    pub fn for_stream(n: usize, sample_rate: f64, secret_seed: impl Into<Vec<u8>>) -> Self {
        let u = counters_per_frame(n);
        Self {
            seed_counter: 0,
            start_time: 0.0,
            rate: u as f64 * sample_rate / n as f64,
            period: u << 32,
            counters_per_frame: u,
            secret_seed: secret_seed.into(),
        }
    }

    /// Parses the secret seed from a hex string.
    pub fn with_hex_seed(mut self, seed: &str) -> Result<Self> {
        self.secret_seed =
            hex::decode(seed.trim()).map_err(|e| Error::Config(format!("secret seed: {e}")))?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::Config("counter period must be positive".into()));
        }
        if self.seed_counter >= self.period {
            return Err(Error::Counter {
                counter: self.seed_counter,
                period: self.period,
            });
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Config(format!("generation rate {} must be positive", self.rate)));
        }
        if !self.start_time.is_finite() {
            return Err(Error::NonFinite(self.start_time));
        }
        if self.counters_per_frame == 0 {
            return Err(Error::Config("counters per frame must be at least 1".into()));
        }
        // Frame alignment survives counter wrap only if P is a multiple of u.
        if !self.period.is_multiple_of(self.counters_per_frame) {
            return Err(Error::Config(format!(
                "period {} is not a multiple of counters per frame {}",
                self.period, self.counters_per_frame
            )));
        }
        Ok(())
    }

    /// Samples per second implied by `g`, `u` and the frame length.
    pub fn sample_rate(&self, n: usize) -> f64 {
        self.rate * n as f64 / self.counters_per_frame as f64
    }
}

/// Stream counter at receiver time `t_rx` corrected by `epsilon`.
///
/// ```
/// use vpsc::keystream::{current_counter, SyncConfig};
///
/// let mut cfg = SyncConfig::for_stream(256, 64_000.0, b"seed".to_vec());
/// cfg.rate = 10.0;
/// cfg.period = 64;
/// cfg.counters_per_frame = 16;
/// assert_eq!(current_counter(&cfg, 7.0, 0.0).unwrap(), 6);
/// ```
pub fn current_counter(cfg: &SyncConfig, t_rx: f64, epsilon: f64) -> Result<u64> {
    let elapsed = elapsed_counters(cfg, t_rx + epsilon)?;
    Ok((elapsed % u128::from(cfg.period)) as u64)
}

/// Counters elapsed since `st` at transmitter time `t`, without the modulo.
pub(crate) fn elapsed_counters(cfg: &SyncConfig, t: f64) -> Result<u128> {
    cfg.validate()?;
    if !t.is_finite() {
        return Err(Error::NonFinite(t));
    }
    let elapsed = t - cfg.start_time;
    if elapsed < 0.0 {
        return Err(Error::Clock(elapsed));
    }
    Ok((elapsed * cfg.rate).floor() as u128)
}

/// Largest multiple of `u` not above `cc`.
pub fn initial_counter(cc: u64, u: u64) -> u64 {
    cc - cc % u.max(1)
}

/// Magnitude and angle keys for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrame {
    magnitude: Vec<f64>,
    angle: Vec<f64>,
    frame_index: u64,
}

impl KeyFrame {
    /// The all-zero key, which leaves every bin untouched.
    pub fn zero(n: usize) -> Result<Self> {
        check_frame_len(n)?;
        Ok(Self {
            magnitude: vec![0.0; n],
            angle: vec![0.0; n],
            frame_index: 0,
        })
    }

    /// Builds a key from explicit parts, enforcing the structure every
    /// generated key has.
    pub fn from_parts(
        magnitude: Vec<f64>,
        angle: Vec<f64>,
        frame_index: u64,
        phi_effective: f64,
    ) -> Result<Self> {
        let n = magnitude.len();
        check_frame_len(n)?;
        if angle.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: angle.len(),
            });
        }
        let bad = |why: String| Err(Error::Key(why));
        if magnitude[0] != 0.0 {
            return bad("DC magnitude key must be zero".into());
        }
        if angle[0] != 0.0 || angle[n / 2] != 0.0 {
            return bad("DC and Nyquist angle keys must be zero".into());
        }
        for (i, (&m, &a)) in magnitude.iter().zip(&angle).enumerate() {
            if !(0.0..phi_effective).contains(&m) {
                return bad(format!("magnitude key {m} at bin {i} outside [0, {phi_effective})"));
            }
            if !(-PI..PI).contains(&a) {
                return bad(format!("angle key {a} at bin {i} outside [-pi, pi)"));
            }
        }
        for i in 1..n / 2 {
            if magnitude[i] != magnitude[n - i] {
                return bad(format!("magnitude key not mirrored at bin {i}"));
            }
            if angle[i] != wrap(-angle[n - i]) {
                return bad(format!("angle key not antisymmetric at bin {i}"));
            }
        }
        Ok(Self {
            magnitude,
            angle,
            frame_index,
        })
    }

    /// Assembles a key from `n/2` magnitude draws followed by `n/2` angle
    /// draws, all in `[0, 1)`.
    fn assemble(values: &[f64], n: usize, phi_effective: f64, frame_index: u64) -> Self {
        let half = n / 2;
        let (v, a) = values[..n].split_at(half);
        let mut magnitude = vec![0.0; n];
        let mut angle = vec![0.0; n];
        for i in 1..=half {
            // v[half - 1] lands on the Nyquist bin, which has no mirror.
            let m = (v[i - 1] * phi_effective).min(phi_effective.next_down());
            magnitude[i] = m;
            magnitude[n - i] = m;
        }
        // a[0] would sit on the DC bin, whose angle key is fixed at zero.
        for i in 1..half {
            let t = wrap(-PI + TAU * a[i]);
            angle[i] = t;
            angle[n - i] = wrap(-t);
        }
        Self {
            magnitude,
            angle,
            frame_index,
        }
    }

    pub fn len(&self) -> usize {
        self.magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude.is_empty()
    }

    /// Magnitude key `k_m`.
    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// Angle key `k_a`.
    pub fn angle(&self) -> &[f64] {
        &self.angle
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }
}

/// AES-CTR generator bound to one [`SyncConfig`].
#[derive(Clone)]
pub struct Keystream {
    cipher: Aes256,
    seed_counter: u64,
    period: u64,
    counters_per_frame: u64,
}

impl fmt::Debug for Keystream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keystream")
            .field("seed_counter", &self.seed_counter)
            .field("period", &self.period)
            .field("counters_per_frame", &self.counters_per_frame)
            .finish_non_exhaustive()
    }
}

impl Keystream {
    pub fn new(cfg: &SyncConfig) -> Result<Self> {
        cfg.validate()?;
        let key = Sha256::digest(&cfg.secret_seed);
        let cipher = Aes256::new_from_slice(&key).expect("SHA-256 digest is a valid AES-256 key");
        Ok(Self {
            cipher,
            seed_counter: cfg.seed_counter,
            period: cfg.period,
            counters_per_frame: cfg.counters_per_frame,
        })
    }

    fn block(&self, counter: u64) -> [u64; VALUES_PER_BLOCK] {
        let mut block = Block::from(u128::from(counter).to_be_bytes());
        self.cipher.encrypt_block(&mut block);
        let (lo, hi) = block.split_at(8);
        [
            u64::from_le_bytes(lo.try_into().unwrap()),
            u64::from_le_bytes(hi.try_into().unwrap()),
        ]
    }

    /// `count` uniform values starting at generator counter `counter`.
    /// Later blocks continue at `counter + 1, counter + 2, …` modulo `P`.
    pub fn raw_values(&self, counter: u64, count: usize) -> Result<Vec<f64>> {
        if counter >= self.period {
            return Err(Error::Counter {
                counter,
                period: self.period,
            });
        }
        let mut out = Vec::with_capacity(count);
        let mut c = counter;
        while out.len() < count {
            for w in self.block(c) {
                if out.len() < count {
                    out.push((w >> 11) as f64 * UNIT);
                }
            }
            c = if c + 1 == self.period { 0 } else { c + 1 };
        }
        Ok(out)
    }

    /// Generator counter at which frame `frame_index` starts.
    pub fn frame_counter(&self, frame_index: u64) -> u64 {
        let c = u128::from(self.seed_counter)
            + u128::from(frame_index) * u128::from(self.counters_per_frame);
        (c % u128::from(self.period)) as u64
    }

    /// Generator counter for a stream counter returned by [`current_counter`].
    pub fn generator_counter(&self, stream_counter: u64) -> u64 {
        ((u128::from(self.seed_counter) + u128::from(stream_counter)) % u128::from(self.period))
            as u64
    }

    /// Raw values reserved for frame `frame_index`.
    pub fn frame_values(&self, frame_index: u64, count: usize) -> Result<Vec<f64>> {
        self.raw_values(self.frame_counter(frame_index), count)
    }

    fn check_frame_capacity(&self, n: usize) -> Result<()> {
        check_frame_len(n)?;
        if (self.counters_per_frame as usize).saturating_mul(VALUES_PER_BLOCK) < n {
            return Err(Error::Config(format!(
                "{} counters per frame cannot key a frame of {n} bins",
                self.counters_per_frame
            )));
        }
        Ok(())
    }

    /// Key frame for frame `frame_index`, magnitudes drawn on `[0, phi_effective)`.
    pub fn key_frame(&self, frame_index: u64, n: usize, phi_effective: f64) -> Result<KeyFrame> {
        self.check_frame_capacity(n)?;
        check_phi(phi_effective)?;
        let values = self.frame_values(frame_index, n)?;
        Ok(KeyFrame::assemble(&values, n, phi_effective, frame_index))
    }

    /// Sequential generation of frames `0, 1, 2, …`.
    pub fn frames(&self, n: usize, phi_effective: f64) -> Result<Frames<'_>> {
        self.check_frame_capacity(n)?;
        check_phi(phi_effective)?;
        Ok(Frames {
            stream: self,
            counter: self.seed_counter,
            index: 0,
            n,
            phi_effective,
        })
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_finite() && phi > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("phi {phi} must be positive and finite")))
    }
}

/// Iterator returned by [`Keystream::frames`].
#[derive(Debug)]
pub struct Frames<'a> {
    stream: &'a Keystream,
    counter: u64,
    index: u64,
    n: usize,
    phi_effective: f64,
}

impl Iterator for Frames<'_> {
    type Item = KeyFrame;

    fn next(&mut self) -> Option<KeyFrame> {
        let mut values = Vec::with_capacity(self.n + VALUES_PER_BLOCK);
        for _ in 0..self.stream.counters_per_frame {
            values.extend(
                self.stream
                    .block(self.counter)
                    .iter()
                    .map(|&w| (w >> 11) as f64 * UNIT),
            );
            self.counter = (self.counter + 1) % self.stream.period;
        }
        let key = KeyFrame::assemble(&values, self.n, self.phi_effective, self.index);
        self.index += 1;
        Some(key)
    }
}

/// Key frame `frame_index` of the stream described by `cfg`.
pub fn key_frame(cfg: &SyncConfig, frame_index: u64, n: usize, phi_effective: f64) -> Result<KeyFrame> {
    Keystream::new(cfg)?.key_frame(frame_index, n, phi_effective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SyncConfig {
        SyncConfig::for_stream(256, 64_000.0, b"unit test seed".to_vec())
    }

    #[test]
    fn counter_examples() {
        let mut c = cfg();
        c.start_time = 0.0;
        c.rate = 1000.0;
        c.counters_per_frame = 1;
        c.period = 1 << 32;
        assert_eq!(current_counter(&c, 0.0, 0.0).unwrap(), 0);
        assert_eq!(current_counter(&c, 1.0, 0.0).unwrap(), 1000);
        assert_eq!(current_counter(&c, 0.75, 0.25).unwrap(), 1000);
        c.rate = 10.0;
        c.period = 64;
        assert_eq!(current_counter(&c, 7.0, 0.0).unwrap(), 6);
        c.start_time = 2.0;
        assert_eq!(current_counter(&c, 1.0, 0.0), Err(Error::Clock(-1.0)));
        assert_eq!(current_counter(&c, 1.5, 0.5).unwrap(), 0);
    }

    #[test]
    fn initial_counter_examples() {
        assert_eq!(initial_counter(0, 16), 0);
        assert_eq!(initial_counter(37, 16), 32);
        assert_eq!(initial_counter(32, 16), 32);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = cfg();
        c.seed_counter = c.period;
        assert!(matches!(c.validate(), Err(Error::Counter { .. })));
        let mut c = cfg();
        c.rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.period = 1000;
        assert!(c.validate().is_err());
        let ks = Keystream::new(&cfg()).unwrap();
        assert!(matches!(ks.raw_values(cfg().period, 1), Err(Error::Counter { .. })));
        assert!(ks.key_frame(0, 512, 1.0).is_err());
    }

    #[test]
    fn hex_seed() {
        let c = cfg().with_hex_seed("00ff10").unwrap();
        assert_eq!(c.secret_seed, vec![0, 255, 16]);
        assert!(cfg().with_hex_seed("zz").is_err());
        assert!(!format!("{c:?}").contains("255"));
    }

    #[test]
    fn structure_n8() {
        let k = key_frame(&cfg(), 3, 8, 5.0).unwrap();
        let (m, a) = (k.magnitude(), k.angle());
        assert_eq!(m[0], 0.0);
        assert_eq!(m[3], m[5]);
        assert_eq!(a[2], -a[6]);
        assert_eq!(a[4], 0.0);
        assert_eq!(a[0], 0.0);
        assert_eq!(k.frame_index(), 3);
        assert!(KeyFrame::from_parts(m.to_vec(), a.to_vec(), 3, 5.0).is_ok());
    }

    #[test]
    fn from_parts_rejects_broken_structure() {
        let mut m = vec![0.0; 8];
        m[1] = 1.0;
        assert!(KeyFrame::from_parts(m.clone(), vec![0.0; 8], 0, 2.0).is_err());
        m[7] = 1.0;
        assert!(KeyFrame::from_parts(m.clone(), vec![0.0; 8], 0, 2.0).is_ok());
        assert!(KeyFrame::from_parts(m.clone(), vec![0.0; 8], 0, 1.0).is_err());
        let mut a = vec![0.0; 8];
        a[4] = 0.5;
        assert!(KeyFrame::from_parts(m, a, 0, 2.0).is_err());
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let ks = Keystream::new(&cfg()).unwrap();
        assert_eq!(ks.raw_values(5, 9).unwrap(), ks.raw_values(5, 9).unwrap());
        assert_eq!(ks.key_frame(7, 256, 3.0).unwrap(), ks.key_frame(7, 256, 3.0).unwrap());
        let mut other = cfg();
        other.secret_seed = b"another seed".to_vec();
        let ko = Keystream::new(&other).unwrap();
        assert_ne!(ks.raw_values(0, 4).unwrap(), ko.raw_values(0, 4).unwrap());
    }

    #[test]
    fn values_wrap_at_period() {
        let mut c = cfg();
        c.period = c.counters_per_frame * 4;
        let ks = Keystream::new(&c).unwrap();
        let tail = ks.raw_values(c.period - 1, 4).unwrap();
        let last = ks.raw_values(c.period - 1, 2).unwrap();
        let first = ks.raw_values(0, 2).unwrap();
        assert_eq!(tail, [last, first].concat());
        assert_eq!(ks.key_frame(5, 256, 1.0).unwrap().magnitude(), ks.key_frame(1, 256, 1.0).unwrap().magnitude());
    }

    #[test]
    fn seed_counter_offsets_frames() {
        let mut c = cfg();
        c.seed_counter = 3 * c.counters_per_frame;
        let shifted = Keystream::new(&c).unwrap();
        let base = Keystream::new(&cfg()).unwrap();
        assert_eq!(
            shifted.key_frame(0, 256, 1.0).unwrap().magnitude(),
            base.key_frame(3, 256, 1.0).unwrap().magnitude()
        );
        assert_eq!(shifted.generator_counter(0), c.seed_counter);
    }
}
