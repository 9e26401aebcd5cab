//! Conversion between time-domain frames and polar spectra.
//!
//! The forward DFT is unnormalized and the inverse carries the `1/N`
//! factor, so a unit cosine with an integer number of cycles puts `N/2`
//! into each of its two conjugate bins. Angles live in `[-π, π)`.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance used for symmetry checks and transform residues.
pub const TOLERANCE: f64 = 1e-9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_fft(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_fft(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Checks that `n` is a usable frame length.
pub fn check_frame_len(n: usize) -> Result<()> {
    if n >= 8 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::FrameLength(n))
    }
}

/// Wraps a finite angle onto `[-π, π)`.
///
/// ```
/// use std::f64::consts::PI;
/// use vpsc::spectral::wrap_angle;
///
/// assert_eq!(wrap_angle(-PI).unwrap(), -PI);
/// assert!((wrap_angle(1.5 * PI).unwrap() + 0.5 * PI).abs() < 1e-15);
/// assert!(wrap_angle(f64::NAN).is_err());
/// ```
pub fn wrap_angle(theta: f64) -> Result<f64> {
    if theta.is_finite() {
        Ok(wrap(theta))
    } else {
        Err(Error::NonFinite(theta))
    }
}

pub(crate) fn wrap(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let w = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Linear quantizer over `[low, high]` with `levels` evenly spaced values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    low: f64,
    high: f64,
    levels: u32,
}

impl Quantizer {
    pub fn new(low: f64, high: f64, levels: u32) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::Config(format!(
                "quantizer range [{low}, {high}] is empty"
            )));
        }
        if levels < 2 {
            return Err(Error::Config("quantizer needs at least 2 levels".into()));
        }
        Ok(Self { low, high, levels })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn step(&self) -> f64 {
        (self.high - self.low) / f64::from(self.levels - 1)
    }

    /// Nearest level index, saturating at the range ends.
    pub fn index(&self, x: f64) -> u32 {
        let t = ((x - self.low) / self.step()).round();
        if t.is_nan() || t <= 0.0 {
            0
        } else if t >= f64::from(self.levels - 1) {
            self.levels - 1
        } else {
            t as u32
        }
    }

    pub fn value(&self, index: u32) -> f64 {
        let i = index.min(self.levels - 1);
        if i == self.levels - 1 {
            self.high
        } else {
            self.low + f64::from(i) * self.step()
        }
    }

    pub fn quantize(&self, x: f64) -> f64 {
        self.value(self.index(x))
    }
}

/// One frame of `N` real time-domain samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    samples: Vec<f64>,
}

impl SignalFrame {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        check_frame_len(samples.len())?;
        Ok(Self { samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Builds a frame from a quantized source, snapping every sample onto
    /// the quantizer grid.
    pub fn ingest(samples: &[f64], quantizer: &Quantizer) -> Result<Self> {
        Self::new(samples.iter().map(|&x| quantizer.quantize(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

impl AsRef<[f64]> for SignalFrame {
    fn as_ref(&self) -> &[f64] {
        &self.samples
    }
}

/// Polar DFT of a real frame: bin magnitudes and angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFrame {
    magnitudes: Vec<f64>,
    angles: Vec<f64>,
}

impl SpectrumFrame {
    /// Builds a spectrum from polar parts. Angles are wrapped onto `[-π, π)`.
    /// Symmetry is not checked here; see [`SpectrumFrame::check_symmetry`].
    pub fn from_polar(magnitudes: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        check_frame_len(magnitudes.len())?;
        if angles.len() != magnitudes.len() {
            return Err(Error::LengthMismatch {
                expected: magnitudes.len(),
                actual: angles.len(),
            });
        }
        if let Some(&m) = magnitudes.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(if m.is_finite() {
                Error::Config(format!("negative magnitude {m}"))
            } else {
                Error::NonFinite(m)
            });
        }
        let angles = angles.into_iter().map(wrap_angle).collect::<Result<_>>()?;
        Ok(Self { magnitudes, angles })
    }

    /// Like [`SpectrumFrame::from_polar`] but accepts negative magnitudes,
    /// folding the sign into the angle.
    pub fn from_signed_polar(magnitudes: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        let (m, a) = magnitudes
            .into_iter()
            .zip(angles)
            .map(|(m, a)| if m < 0.0 { (-m, a + PI) } else { (m, a) })
            .unzip();
        Self::from_polar(m, a)
    }

    /// Polar form of a complex spectrum. Only bins `0..=N/2` are read; the
    /// upper half is mirrored so the result is exactly symmetric.
    pub fn from_complex(bins: &[Complex64]) -> Result<Self> {
        let n = bins.len();
        check_frame_len(n)?;
        let mut magnitudes = vec![0.0; n];
        let mut angles = vec![0.0; n];
        for k in [0, n / 2] {
            let re = bins[k].re;
            magnitudes[k] = re.abs();
            angles[k] = if re < 0.0 { -PI } else { 0.0 };
        }
        for k in 1..n / 2 {
            let (m, a) = bins[k].to_polar();
            magnitudes[k] = m;
            magnitudes[n - k] = m;
            if a >= PI || a <= -PI {
                angles[k] = -PI;
                angles[n - k] = -PI;
            } else {
                angles[k] = a;
                angles[n - k] = -a;
            }
        }
        Ok(Self { magnitudes, angles })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_frame_len(n)?;
        Ok(Self {
            magnitudes: vec![0.0; n],
            angles: vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.magnitudes, self.angles)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.magnitudes
            .iter()
            .zip(&self.angles)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    /// Verifies the conjugate symmetry of a real signal's spectrum.
    pub fn check_symmetry(&self) -> Result<()> {
        let n = self.len();
        let x = self.to_complex();
        for k in [0, n / 2] {
            if x[k].im.abs() > TOLERANCE * self.magnitudes[k].max(1.0) {
                return Err(Error::Symmetry { bin: k });
            }
        }
        for k in 1..n / 2 {
            let scale = self.magnitudes[k].max(self.magnitudes[n - k]).max(1.0);
            if (x[k] - x[n - k].conj()).norm() > TOLERANCE * scale {
                return Err(Error::Symmetry { bin: k });
            }
        }
        Ok(())
    }
}

/// Polar DFT of a frame.
///
/// ```
/// use vpsc::spectral::{analyze, SignalFrame};
///
/// let tone: Vec<f64> = (0..8)
///     .map(|n| (std::f64::consts::TAU * n as f64 / 8.0).cos())
///     .collect();
/// let spectrum = analyze(&SignalFrame::new(tone).unwrap());
/// assert!((spectrum.magnitudes()[1] - 4.0).abs() < 1e-12);
/// assert!((spectrum.magnitudes()[7] - 4.0).abs() < 1e-12);
/// ```
pub fn analyze(frame: &SignalFrame) -> SpectrumFrame {
    let n = frame.len();
    let mut buf: Vec<Complex64> = frame
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    forward_fft(n).process(&mut buf);
    SpectrumFrame::from_complex(&buf).expect("frame length already validated")
}

/// Inverse of [`analyze`].
pub fn synthesize(spectrum: &SpectrumFrame) -> Result<SignalFrame> {
    spectrum.check_symmetry()?;
    let n = spectrum.len();
    let mut buf = spectrum.to_complex();
    inverse_fft(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let peak = spectrum.magnitudes().iter().fold(1.0_f64, |a, &m| a.max(m));
    let limit = TOLERANCE * peak;
    let mut samples = Vec::with_capacity(n);
    for (i, c) in buf.iter().enumerate() {
        if (c.im * scale).abs() > limit {
            return Err(Error::Symmetry { bin: i });
        }
        samples.push(c.re * scale);
    }
    SignalFrame::new(samples)
}
