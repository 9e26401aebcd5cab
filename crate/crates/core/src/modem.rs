//! Single-carrier 16-QAM with Gray-coded axes and hard decisions.
//!
//! Bits `0..2` select the in-phase level and bits `2..4` the quadrature
//! level, each through the reflected Gray code `00 → -3`, `01 → -1`,
//! `11 → +1`, `10 → +3`. One symbol spans one cipher frame.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spectral::{check_frame_len, SignalFrame};

pub const LEVELS: [i8; 4] = [-3, -1, 1, 3];

fn gray_level(b0: bool, b1: bool) -> i8 {
    match (b0, b1) {
        (false, false) => -3,
        (false, true) => -1,
        (true, true) => 1,
        (true, false) => 3,
    }
}

fn level_bits(level: i8) -> (bool, bool) {
    match level {
        -3 => (false, false),
        -1 => (false, true),
        1 => (true, true),
        _ => (true, false),
    }
}

fn level_index(level: i8) -> usize {
    LEVELS.iter().position(|&l| l == level).expect("valid level")
}

/// Soft values this close to a decision boundary count as on it.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Nearest axis level. Points on a boundary go to the lower level.
pub fn decide(x: f64) -> i8 {
    if x <= -2.0 + TIE_TOLERANCE {
        -3
    } else if x <= TIE_TOLERANCE {
        -1
    } else if x <= 2.0 + TIE_TOLERANCE {
        1
    } else {
        3
    }
}

/// A 16-QAM constellation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QamSymbol {
    i: i8,
    q: i8,
}

impl QamSymbol {
    pub fn from_bits(bits: [bool; 4]) -> Self {
        Self {
            i: gray_level(bits[0], bits[1]),
            q: gray_level(bits[2], bits[3]),
        }
    }

    /// Symbol at position `index` of [`constellation`].
    pub fn from_index(index: usize) -> Self {
        Self {
            i: LEVELS[(index / 4) % 4],
            q: LEVELS[index % 4],
        }
    }

    pub fn from_levels(i: i8, q: i8) -> Result<Self> {
        if LEVELS.contains(&i) && LEVELS.contains(&q) {
            Ok(Self { i, q })
        } else {
            Err(Error::Config(format!("({i}, {q}) is not a 16-QAM point")))
        }
    }

    /// Constellation index: in-phase level major, both axes ascending.
    pub fn index(&self) -> usize {
        4 * level_index(self.i) + level_index(self.q)
    }

    pub fn i(&self) -> i8 {
        self.i
    }

    pub fn q(&self) -> i8 {
        self.q
    }

    pub fn bits(&self) -> [bool; 4] {
        let (b0, b1) = level_bits(self.i);
        let (b2, b3) = level_bits(self.q);
        [b0, b1, b2, b3]
    }
}

/// All 16 points in index order.
pub fn constellation() -> [QamSymbol; 16] {
    std::array::from_fn(QamSymbol::from_index)
}

/// Carrier and timing of the modem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModemConfig {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    /// Symbol duration in seconds.
    pub symbol_duration: f64,
    pub amplitude: f64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl ModemConfig {
    /// 8 kHz carrier sampled at 64 kHz, 4 ms symbols (256 samples).
    pub fn desk_scale() -> Self {
        Self {
            carrier_hz: 8_000.0,
            sample_rate_hz: 64_000.0,
            symbol_duration: 0.004,
            amplitude: 1.0,
        }
    }

    pub fn symbol_samples(&self) -> usize {
        (self.symbol_duration * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.carrier_hz,
            self.sample_rate_hz,
            self.symbol_duration,
            self.amplitude,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_finite {
            return Err(Error::Config(format!("modem parameters must be positive: {self:?}")));
        }
        let samples = self.symbol_duration * self.sample_rate_hz;
        if (samples - samples.round()).abs() > 1e-9 * samples.max(1.0) {
            return Err(Error::Config(format!(
                "symbol duration spans {samples} samples, not an integer"
            )));
        }
        check_frame_len(self.symbol_samples())?;
        // Guard: half the main-lobe width of a rectangular symbol.
        let guard = 2.0 / self.symbol_duration;
        if self.sample_rate_hz < 2.0 * (self.carrier_hz + guard) {
            return Err(Error::Config(format!(
                "sample rate {} Hz is below Nyquist for carrier {} Hz",
                self.sample_rate_hz, self.carrier_hz
            )));
        }
        Ok(())
    }

    fn phase(&self, n: usize) -> f64 {
        TAU * self.carrier_hz * n as f64 / self.sample_rate_hz
    }
}

/// Carrier waveform of one symbol.
///
/// ```
/// use vpsc::modem::{demodulate, modulate, ModemConfig};
///
/// let cfg = ModemConfig::desk_scale();
/// let bits = [true, false, false, true];
/// let frame = modulate(bits, &cfg).unwrap();
/// assert_eq!(frame.len(), 256);
/// assert_eq!(demodulate(&frame, &cfg), bits);
/// ```
pub fn modulate(bits: [bool; 4], cfg: &ModemConfig) -> Result<SignalFrame> {
    modulate_symbol(QamSymbol::from_bits(bits), cfg)
}

pub fn modulate_symbol(symbol: QamSymbol, cfg: &ModemConfig) -> Result<SignalFrame> {
    cfg.validate()?;
    let (i, q) = (f64::from(symbol.i), f64::from(symbol.q));
    let samples = (0..cfg.symbol_samples())
        .map(|n| {
            let (s, c) = cfg.phase(n).sin_cos();
            cfg.amplitude * (i * c - q * s)
        })
        .collect();
    SignalFrame::new(samples)
}

/// Least-squares estimate of the `(I, Q)` point carried by `s`.
///
/// Projects onto the two carrier references through their Gram matrix, so
/// the estimate is exact for clean symbols even when the frame does not
/// hold an integer number of carrier cycles.
pub fn soft_decision(s: &[f64], cfg: &ModemConfig) -> (f64, f64) {
    let (mut cc, mut cs, mut ss, mut xc, mut xs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, &x) in s.iter().enumerate() {
        let (sin, cos) = cfg.phase(n).sin_cos();
        let (c, d) = (cfg.amplitude * cos, -cfg.amplitude * sin);
        cc += c * c;
        cs += c * d;
        ss += d * d;
        xc += x * c;
        xs += x * d;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < f64::EPSILON * cc * ss {
        return (0.0, 0.0);
    }
    ((ss * xc - cs * xs) / det, (cc * xs - cs * xc) / det)
}

/// Hard-decision symbol for a received frame.
pub fn detect(s: &SignalFrame, cfg: &ModemConfig) -> QamSymbol {
    let (i, q) = soft_decision(s.samples(), cfg);
    QamSymbol {
        i: decide(i),
        q: decide(q),
    }
}

/// Hard-decision bits for a received frame.
pub fn demodulate(s: &SignalFrame, cfg: &ModemConfig) -> [bool; 4] {
    detect(s, cfg).bits()
}

/// Mean per-sample power of a modulated symbol, averaged over the
/// constellation.
pub fn nominal_symbol_power(cfg: &ModemConfig) -> Result<f64> {
    let mut total = 0.0;
    for symbol in constellation() {
        let f = modulate_symbol(symbol, cfg)?;
        total += f.energy() / f.len() as f64;
    }
    Ok(total / 16.0)
}

/// Largest bin magnitude any clean symbol produces.
pub fn max_symbol_magnitude(cfg: &ModemConfig) -> Result<f64> {
    let mut peak: f64 = 0.0;
    for symbol in constellation() {
        let spec = crate::spectral::analyze(&modulate_symbol(symbol, cfg)?);
        peak = spec.magnitudes().iter().fold(peak, |a, &m| a.max(m));
    }
    Ok(peak)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_code_per_axis() {
        let s = QamSymbol::from_bits([false, false, true, false]);
        assert_eq!((s.i(), s.q()), (-3, 3));
        let s = QamSymbol::from_bits([true, true, false, true]);
        assert_eq!((s.i(), s.q()), (1, -1));
        // Neighbouring levels differ in exactly one bit.
        for w in LEVELS.windows(2) {
            let (a, b) = (level_bits(w[0]), level_bits(w[1]));
            assert_eq!(u8::from(a.0 != b.0) + u8::from(a.1 != b.1), 1);
        }
    }

    #[test]
    fn index_round_trip() {
        for (k, s) in constellation().iter().enumerate() {
            assert_eq!(s.index(), k);
            assert_eq!(QamSymbol::from_bits(s.bits()), *s);
        }
        assert!(QamSymbol::from_levels(2, 1).is_err());
    }

    #[test]
    fn exhaustive_loopback() {
        let cfg = ModemConfig::desk_scale();
        for s in constellation() {
            let f = modulate_symbol(s, &cfg).unwrap();
            assert_eq!(detect(&f, &cfg), s);
            let (i, q) = soft_decision(f.samples(), &cfg);
            assert!((i - f64::from(s.i())).abs() < 1e-9 && (q - f64::from(s.q())).abs() < 1e-9);
        }
    }

    #[test]
    fn loopback_with_fractional_cycles() {
        let cfg = ModemConfig {
            carrier_hz: 8_123.4,
            ..ModemConfig::desk_scale()
        };
        for s in constellation() {
            assert_eq!(detect(&modulate_symbol(s, &cfg).unwrap(), &cfg), s);
        }
    }

    #[test]
    fn energy_tracks_radius() {
        // Over whole carrier cycles the symbol energy is A²·N·(I²+Q²)/2.
        let cfg = ModemConfig::desk_scale();
        for s in constellation() {
            let f = modulate_symbol(s, &cfg).unwrap();
            let r2 = f64::from(s.i()).powi(2) + f64::from(s.q()).powi(2);
            let want = 256.0 * r2 / 2.0;
            assert!((f.energy() - want).abs() < 0.01 * want);
        }
        assert!((nominal_symbol_power(&cfg).unwrap() - 5.0).abs() < 1e-9);
        let peak = max_symbol_magnitude(&cfg).unwrap();
        assert!((peak - 128.0 * 18f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn ties_go_low() {
        assert_eq!(decide(0.0), -1);
        assert_eq!(decide(-2.0), -3);
        assert_eq!(decide(2.0), 1);
        assert_eq!(decide(2.0 + 1e-12), 1);
        assert_eq!(decide(2.0 + 1e-6), 3);
        let cfg = ModemConfig::desk_scale();
        let f = SignalFrame::zeros(256).unwrap();
        let s = detect(&f, &cfg);
        assert_eq!((s.i(), s.q()), (-1, -1));
        assert_eq!(s.index(), 5);
    }

    #[test]
    fn config_checks() {
        let mut c = ModemConfig::desk_scale();
        c.carrier_hz = 31_800.0;
        assert!(c.validate().is_err());
        let mut c = ModemConfig::desk_scale();
        c.symbol_duration = 0.00401;
        assert!(c.validate().is_err());
        let mut c = ModemConfig::desk_scale();
        c.symbol_duration = 0.003;
        assert!(matches!(c.validate(), Err(Error::FrameLength(192))));
        assert!(modulate([true; 4], &c).is_err());
    }
}
