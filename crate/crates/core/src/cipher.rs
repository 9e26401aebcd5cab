//! Modulo-arithmetic encryption of polar spectra.
//!
//! Every masked bin has its magnitude shifted by the key modulo a mode
//! dependent modulus and its angle rotated by the angle key. Four modes
//! handle channel noise differently:
//!
//! | mode | modulus | magnitude on the wire |
//! |------|---------|-----------------------|
//! | [`Mode::Plain`] | `φ` | `(m + k) mod φ + λ` |
//! | [`Mode::PreemptiveRise`] | `φ + 2ψ` | `(m + k + ψ) mod (φ + 2ψ) + λ` |
//! | [`Mode::StatisticalFloor`] | `φ` | as plain; the receiver clamps |
//! | [`Mode::Combined`] | `φ + 2λ` | `(m + λ + k) mod (φ + 2λ) + λ` |
//!
//! Keys must be drawn with magnitudes on `[0, φ_effective)`, see
//! [`CipherConfig::phi_effective`].

use crate::error::{Error, Result};
use crate::keystream::KeyFrame;
use crate::spectral::{analyze, check_frame_len, synthesize, wrap, SignalFrame, SpectrumFrame};

/// Noise mitigation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Plain,
    PreemptiveRise,
    StatisticalFloor,
    Combined,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "plain" => Ok(Self::Plain),
            "preemptive_rise" | "pr" => Ok(Self::PreemptiveRise),
            "statistical_floor" | "sf" => Ok(Self::StatisticalFloor),
            "combined" => Ok(Self::Combined),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Plain => "plain",
            Self::PreemptiveRise => "preemptive_rise",
            Self::StatisticalFloor => "statistical_floor",
            Self::Combined => "combined",
        })
    }
}

/// Bins selected for encryption. Always symmetric about `N/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandMask(Vec<bool>);

impl BandMask {
    pub fn full(n: usize) -> Result<Self> {
        check_frame_len(n)?;
        Ok(Self(vec![true; n]))
    }

    /// Bins `low..=high` of the lower half plus their mirrors.
    pub fn band(n: usize, low: usize, high: usize) -> Result<Self> {
        check_frame_len(n)?;
        if low > high || high > n / 2 {
            return Err(Error::Config(format!(
                "band {low}..={high} does not fit a frame of {n}"
            )));
        }
        let mut mask = vec![false; n];
        for k in low..=high {
            mask[k] = true;
            mask[(n - k) % n] = true;
        }
        Ok(Self(mask))
    }

    /// Band covering `[low_hz, high_hz]` at sample rate `fs`.
    pub fn from_hz(n: usize, fs: f64, low_hz: f64, high_hz: f64) -> Result<Self> {
        let bin = |f: f64| (f * n as f64 / fs).round();
        let (lo, hi) = (bin(low_hz), bin(high_hz));
        if !(lo >= 0.0 && hi <= (n / 2) as f64) {
            return Err(Error::Config(format!(
                "band [{low_hz}, {high_hz}] Hz exceeds Nyquist at {fs} Hz"
            )));
        }
        Self::band(n, lo as usize, hi as usize)
    }

    pub fn from_vec(mask: Vec<bool>) -> Result<Self> {
        let n = mask.len();
        check_frame_len(n)?;
        if let Some(i) = (1..n / 2).find(|&i| mask[i] != mask[n - i]) {
            return Err(Error::Config(format!("band mask is not symmetric at bin {i}")));
        }
        Ok(Self(mask))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.0[bin]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Parameters shared by both ends of a VPSC link.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherConfig {
    pub n: usize,
    /// Largest plaintext magnitude the link will ever carry (`φ`).
    pub phi: f64,
    /// Amplification added to every encrypted magnitude (`λ`).
    pub lambda: f64,
    /// Buffer zone width (`ψ`).
    pub psi: f64,
    /// Multiple of the per-bin noise deviation used for `ψ`.
    pub psi_multiplier: u32,
    pub mode: Mode,
    pub band_mask: BandMask,
}

impl CipherConfig {
    /// Plain mode, no amplification, every bin encrypted.
    pub fn new(n: usize, phi: f64) -> Result<Self> {
        let cfg = Self {
            n,
            phi,
            lambda: 0.0,
            psi: 0.0,
            psi_multiplier: 1,
            mode: Mode::Plain,
            band_mask: BandMask::full(n)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_psi(mut self, psi: f64) -> Self {
        self.psi = psi;
        self
    }

    /// Sets `ψ = u·σ₀` for a per-bin noise deviation `sigma0`.
    pub fn with_noise_sigma(mut self, sigma0: f64, multiplier: u32) -> Self {
        self.psi_multiplier = multiplier;
        self.psi = f64::from(multiplier) * sigma0;
        self
    }

    pub fn with_band_mask(mut self, mask: BandMask) -> Self {
        self.band_mask = mask;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_frame_len(self.n)?;
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must be finite and non-negative")))
            }
        };
        finite_nonneg("lambda", self.lambda)?;
        finite_nonneg("psi", self.psi)?;
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::Config(format!("phi = {} must be positive", self.phi)));
        }
        if self.psi_multiplier == 0 {
            return Err(Error::Config("psi multiplier must be positive".into()));
        }
        if self.band_mask.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: self.band_mask.len(),
            });
        }
        Ok(())
    }

    /// Modulus of the magnitude arithmetic, and the range keys must be
    /// drawn from.
    pub fn phi_effective(&self) -> f64 {
        match self.mode {
            Mode::Plain | Mode::StatisticalFloor => self.phi,
            Mode::PreemptiveRise => self.phi + 2.0 * self.psi,
            Mode::Combined => self.phi + 2.0 * self.lambda,
        }
    }

    /// Margin kept below `φ` when statistical floor clamps impossible
    /// magnitudes.
    pub fn epsilon_small(&self) -> f64 {
        1e-9 * self.phi
    }

    /// Encrypts one bin magnitude under this configuration's mode.
    pub fn encrypt_magnitude(&self, m: f64, k: f64) -> f64 {
        encrypt_magnitude(self, self.mode, m, k)
    }

    /// Decrypts one bin magnitude. The result can be negative under noise.
    pub fn decrypt_magnitude(&self, c: f64, k: f64) -> f64 {
        decrypt_magnitude(self, self.mode, c, k)
    }
}

fn modulo(x: f64, m: f64) -> f64 {
    let r = x.rem_euclid(m);
    if r >= m {
        0.0
    } else {
        r
    }
}

fn encrypt_magnitude(cfg: &CipherConfig, mode: Mode, m: f64, k: f64) -> f64 {
    let (phi, lambda, psi) = (cfg.phi, cfg.lambda, cfg.psi);
    match mode {
        Mode::Plain | Mode::StatisticalFloor => modulo(m + k, phi) + lambda,
        Mode::PreemptiveRise => modulo(m + k + psi, phi + 2.0 * psi) + lambda,
        Mode::Combined => modulo(m + lambda + k, phi + 2.0 * lambda) + lambda,
    }
}

fn decrypt_magnitude(cfg: &CipherConfig, mode: Mode, c: f64, k: f64) -> f64 {
    let (phi, lambda, psi) = (cfg.phi, cfg.lambda, cfg.psi);
    match mode {
        Mode::Plain => modulo(c - lambda - k, phi),
        Mode::PreemptiveRise => modulo(c - lambda - k, phi + 2.0 * psi) - psi,
        Mode::StatisticalFloor => {
            // λ comes off first so the impossible-magnitude test sees the
            // modulo-domain value.
            let mut x = c - lambda;
            if x >= phi {
                x = phi - cfg.epsilon_small();
            }
            x -= k;
            if (-psi..0.0).contains(&x) {
                x = 0.0;
            }
            modulo(x, phi)
        }
        Mode::Combined => {
            let ceiling = phi + 3.0 * lambda;
            let x = (c.min(ceiling) - lambda).max(0.0);
            modulo(x - k, phi + 2.0 * lambda) - lambda
        }
    }
}

fn check_inputs(cfg: &CipherConfig, x: &SpectrumFrame, k: &KeyFrame) -> Result<()> {
    cfg.validate()?;
    for len in [x.len(), k.len()] {
        if len != cfg.n {
            return Err(Error::LengthMismatch {
                expected: cfg.n,
                actual: len,
            });
        }
    }
    Ok(())
}

fn encrypt_with(
    mode: Mode,
    m: &SpectrumFrame,
    k: &KeyFrame,
    cfg: &CipherConfig,
) -> Result<SpectrumFrame> {
    check_inputs(cfg, m, k)?;
    let mut mags = m.magnitudes().to_vec();
    let mut angles = m.angles().to_vec();
    for i in (0..cfg.n).filter(|&i| cfg.band_mask.contains(i)) {
        if mags[i] >= cfg.phi {
            return Err(Error::PhiViolation {
                bin: i,
                magnitude: mags[i],
                phi: cfg.phi,
            });
        }
        mags[i] = encrypt_magnitude(cfg, mode, mags[i], k.magnitude()[i]);
        angles[i] = wrap(angles[i] + k.angle()[i]);
    }
    SpectrumFrame::from_polar(mags, angles)
}

fn decrypt_with(
    mode: Mode,
    c: &SpectrumFrame,
    k: &KeyFrame,
    cfg: &CipherConfig,
) -> Result<SpectrumFrame> {
    check_inputs(cfg, c, k)?;
    let mut mags = c.magnitudes().to_vec();
    let mut angles = c.angles().to_vec();
    for i in (0..cfg.n).filter(|&i| cfg.band_mask.contains(i)) {
        mags[i] = decrypt_magnitude(cfg, mode, mags[i], k.magnitude()[i]);
        angles[i] = wrap(angles[i] - k.angle()[i]);
    }
    SpectrumFrame::from_signed_polar(mags, angles)
}

/// Plain-mode encryption.
///
/// ```
/// use vpsc::cipher::{encrypt_plain, CipherConfig};
/// use vpsc::keystream::KeyFrame;
/// use vpsc::spectral::SpectrumFrame;
///
/// let cfg = CipherConfig::new(8, 10.0).unwrap().with_lambda(0.5);
/// let mut m = vec![0.0; 8];
/// m[2] = 7.0;
/// m[6] = 7.0;
/// let mut k = vec![0.0; 8];
/// k[2] = 5.0;
/// k[6] = 5.0;
/// let key = KeyFrame::from_parts(k, vec![0.0; 8], 0, 10.0).unwrap();
/// let c = encrypt_plain(&SpectrumFrame::from_polar(m, vec![0.0; 8]).unwrap(), &key, &cfg).unwrap();
/// assert!((c.magnitudes()[2] - 2.5).abs() < 1e-12);
/// ```
pub fn encrypt_plain(m: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    encrypt_with(Mode::Plain, m, k, cfg)
}

pub fn decrypt_plain(c: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    decrypt_with(Mode::Plain, c, k, cfg)
}

pub fn encrypt_pr(m: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    encrypt_with(Mode::PreemptiveRise, m, k, cfg)
}

pub fn decrypt_pr(c: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    decrypt_with(Mode::PreemptiveRise, c, k, cfg)
}

/// Statistical-floor decryption of a plain-mode ciphertext.
///
/// Exact noiseless recovery needs plaintext magnitudes below `φ − ψ`:
/// a magnitude in `[φ − ψ, φ)` that wrapped during encryption lands in the
/// fallout window and is floored to zero.
pub fn decrypt_sf(c: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    decrypt_with(Mode::StatisticalFloor, c, k, cfg)
}

pub fn encrypt_combined(m: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    encrypt_with(Mode::Combined, m, k, cfg)
}

pub fn decrypt_combined(c: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    decrypt_with(Mode::Combined, c, k, cfg)
}

/// Encrypts a spectrum under `cfg.mode`.
pub fn encrypt_spectrum(m: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    encrypt_with(cfg.mode, m, k, cfg)
}

/// Decrypts a spectrum under `cfg.mode`.
pub fn decrypt_spectrum(c: &SpectrumFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SpectrumFrame> {
    decrypt_with(cfg.mode, c, k, cfg)
}

/// Time-domain encryption: analyze, encrypt, synthesize.
pub fn encrypt_frame(s: &SignalFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SignalFrame> {
    synthesize(&encrypt_spectrum(&analyze(s), k, cfg)?)
}

/// Time-domain decryption: analyze, decrypt, synthesize.
pub fn decrypt_frame(s: &SignalFrame, k: &KeyFrame, cfg: &CipherConfig) -> Result<SignalFrame> {
    synthesize(&decrypt_spectrum(&analyze(s), k, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(phi: f64) -> CipherConfig {
        CipherConfig::new(8, phi).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let c = cfg(10.0);
        assert!((c.encrypt_magnitude(7.0, 5.0) - 2.0).abs() < 1e-12);
        let c = c.with_lambda(0.5);
        assert!((c.encrypt_magnitude(7.0, 5.0) - 2.5).abs() < 1e-12);
        assert!((c.decrypt_magnitude(2.5, 5.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn noise_anomaly() {
        let c = cfg(10.0);
        for k in [0.0, 2.5, 5.0, 9.99] {
            let received = c.encrypt_magnitude(9.9, k) + 0.3;
            assert!((c.decrypt_magnitude(received, k) - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn preemptive_rise_absorbs_noise() {
        let c = cfg(10.0).with_psi(1.0).with_mode(Mode::PreemptiveRise);
        for k in [0.0, 3.0, 11.5] {
            let received = c.encrypt_magnitude(9.9, k) + 0.3;
            assert!((c.decrypt_magnitude(received, k) - 10.2).abs() < 1e-9);
        }
        let c0 = cfg(10.0).with_mode(Mode::PreemptiveRise);
        let p = cfg(10.0);
        assert_eq!(c0.encrypt_magnitude(3.3, 8.1), p.encrypt_magnitude(3.3, 8.1));
    }

    #[test]
    fn statistical_floor_examples() {
        let c = cfg(10.0).with_psi(0.5).with_mode(Mode::StatisticalFloor);
        let sent = c.encrypt_magnitude(0.05, 3.0);
        assert!((sent - 3.05).abs() < 1e-12);
        assert_eq!(c.decrypt_magnitude(sent - 0.10, 3.0), 0.0);
        // Impossible magnitude: clamped just below phi before the key comes off.
        let got = c.decrypt_magnitude(10.4, 3.0);
        assert!((got - (7.0 - c.epsilon_small())).abs() < 1e-12);
        assert!(got < 7.0);
    }

    #[test]
    fn statistical_floor_misfloors_near_phi() {
        // A plaintext within psi of phi that wrapped during encryption is
        // indistinguishable from a small magnitude pushed negative by noise.
        let c = cfg(10.0).with_psi(0.5).with_mode(Mode::StatisticalFloor);
        let sent = c.encrypt_magnitude(9.8, 3.0);
        assert_eq!(c.decrypt_magnitude(sent, 3.0), 0.0);
        let sent = c.encrypt_magnitude(9.4, 3.0);
        assert!((c.decrypt_magnitude(sent, 3.0) - 9.4).abs() < 1e-12);
    }

    #[test]
    fn combined_examples() {
        let c = cfg(10.0).with_lambda(1.0).with_mode(Mode::Combined);
        let lambda_zero = cfg(10.0).with_mode(Mode::Combined);
        assert_eq!(lambda_zero.encrypt_magnitude(4.0, 7.0), cfg(10.0).encrypt_magnitude(4.0, 7.0));
        assert_eq!(c.decrypt_magnitude(10.0 + 3.0 + 0.7, 2.0), c.decrypt_magnitude(13.0, 2.0));
        for (m, k) in [(0.0, 0.0), (9.99, 11.9), (5.0, 6.5)] {
            let sent = c.encrypt_magnitude(m, k);
            assert!((c.lambda..c.phi + 3.0 * c.lambda).contains(&sent));
            for noise in [-0.99, -0.3, 0.0, 0.4, 0.99] {
                let err = c.decrypt_magnitude(sent + noise, k) - m;
                assert!(err.abs() <= noise.abs() + 1e-9, "m={m} k={k} noise={noise} err={err}");
            }
        }
    }

    #[test]
    fn phi_violation() {
        let c = cfg(10.0);
        let mut m = vec![0.0; 8];
        m[1] = 10.0;
        m[7] = 10.0;
        let s = SpectrumFrame::from_polar(m, vec![0.0; 8]).unwrap();
        let err = encrypt_plain(&s, &KeyFrame::zero(8).unwrap(), &c).unwrap_err();
        assert!(matches!(err, Error::PhiViolation { bin: 1, .. }));
        // Out-of-band bins are not bound by phi.
        let c = c.with_band_mask(BandMask::band(8, 2, 3).unwrap());
        assert!(encrypt_plain(&s, &KeyFrame::zero(8).unwrap(), &c).is_ok());
    }

    #[test]
    fn band_masks() {
        let m = BandMask::band(16, 2, 4).unwrap();
        let on: Vec<usize> = (0..16).filter(|&i| m.contains(i)).collect();
        assert_eq!(on, vec![2, 3, 4, 12, 13, 14]);
        assert!(BandMask::band(16, 0, 8).unwrap().as_slice().iter().all(|&b| b));
        assert!(BandMask::band(16, 5, 9).is_err());
        let mut v = vec![false; 8];
        v[1] = true;
        assert!(BandMask::from_vec(v.clone()).is_err());
        v[7] = true;
        assert!(BandMask::from_vec(v).is_ok());
        let hz = BandMask::from_hz(256, 64_000.0, 4_000.0, 12_000.0).unwrap();
        assert!(hz.contains(16) && hz.contains(48) && !hz.contains(15) && !hz.contains(49));
    }

    #[test]
    fn mode_names() {
        for mode in [Mode::Plain, Mode::PreemptiveRise, Mode::StatisticalFloor, Mode::Combined] {
            assert_eq!(mode.to_string().parse::<Mode>().unwrap(), mode);
        }
        assert_eq!("pr".parse::<Mode>().unwrap(), Mode::PreemptiveRise);
        assert!("rot13".parse::<Mode>().is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(CipherConfig::new(8, 0.0).is_err());
        assert!(cfg(1.0).with_lambda(-1.0).validate().is_err());
        assert!(cfg(1.0).with_psi(f64::NAN).validate().is_err());
    }

    proptest! {
        #[test]
        fn scalar_round_trip(
            m in 0.0..10.0f64,
            k in 0.0..1.0f64,
            lambda in 0.0..3.0f64,
            psi in 0.0..3.0f64,
        ) {
            for mode in [Mode::Plain, Mode::PreemptiveRise, Mode::Combined] {
                let c = cfg(10.0).with_lambda(lambda).with_psi(psi).with_mode(mode);
                let key = k * c.phi_effective();
                let back = c.decrypt_magnitude(c.encrypt_magnitude(m, key), key);
                prop_assert!((back - m).abs() < 1e-9, "{mode}: {m} -> {back}");
            }
        }

        #[test]
        fn pr_error_equals_noise(m in 0.0..10.0f64, k in 0.0..1.0f64, t in -0.999..0.999f64) {
            let c = cfg(10.0).with_psi(0.5).with_lambda(0.25).with_mode(Mode::PreemptiveRise);
            let key = k * c.phi_effective();
            let noise = t * c.psi;
            let got = c.decrypt_magnitude(c.encrypt_magnitude(m, key) + noise, key);
            prop_assert!((got - m - noise).abs() < 1e-9);
        }
    }
}
