use crate::error::{Error, Result};
use crate::keystream::Keystream;
use crate::spectral::SignalFrame;

/// Smallest mask factor a generated key uses.
pub const MIN_FACTOR: f64 = 0.1;
const MAX_FACTOR: f64 = 1.0;

/// Per-sample multiplicative factors plus the sample range mapped onto
/// `[1, 2]` before the logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmKey {
    factors: Vec<f64>,
    low: f64,
    high: f64,
}

impl AlmKey {
    pub fn new(factors: Vec<f64>, low: f64, high: f64) -> Result<Self> {
        if let Some(f) = factors.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Key(format!("mask factor {f} must be positive")));
        }
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::Config(format!("sample range [{low}, {high}] is empty")));
        }
        Ok(Self { factors, low, high })
    }

    /// Factors on `[0.1, 1)` drawn from frame `frame_index` of the stream.
    pub fn generate(stream: &Keystream, frame_index: u64, n: usize, low: f64, high: f64) -> Result<Self> {
        let factors = stream
            .frame_values(frame_index, n)?
            .into_iter()
            .map(|u| MIN_FACTOR + u * (MAX_FACTOR - MIN_FACTOR))
            .collect();
        Self::new(factors, low, high)
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    /// Affine map of `[low, high]` onto `[1, 2]`, kept strictly positive.
    pub fn offset(&self, x: f64) -> f64 {
        (1.0 + (x - self.low) / (self.high - self.low)).max(f64::MIN_POSITIVE)
    }

    pub fn unoffset(&self, y: f64) -> f64 {
        self.low + (y - 1.0) * (self.high - self.low)
    }

    fn check(&self, s: &SignalFrame) -> Result<()> {
        if s.len() == self.factors.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.factors.len(),
                actual: s.len(),
            })
        }
    }
}

/// `c[i] = ln(offset(s[i]) · factor[i])`.
pub fn alm_encrypt(s: &SignalFrame, key: &AlmKey) -> Result<SignalFrame> {
    key.check(s)?;
    SignalFrame::new(
        s.samples()
            .iter()
            .zip(&key.factors)
            .map(|(&x, &f)| (key.offset(x) * f).ln())
            .collect(),
    )
}

pub fn alm_decrypt(c: &SignalFrame, key: &AlmKey) -> Result<SignalFrame> {
    key.check(c)?;
    SignalFrame::new(
        c.samples()
            .iter()
            .zip(&key.factors)
            .map(|(&y, &f)| key.unoffset(y.exp() / f))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_factors() {
        let key = AlmKey::new(vec![1.0; 8], -1.0, 1.0).unwrap();
        let s = SignalFrame::new(vec![-1.0, -0.5, 0.0, 0.5, 1.0, 0.25, -0.25, 0.0]).unwrap();
        let c = alm_encrypt(&s, &key).unwrap();
        assert_eq!(c.samples()[0], 0.0);
        assert!((c.samples()[4] - 2f64.ln()).abs() < 1e-15);
        let back = alm_decrypt(&c, &key).unwrap();
        for (a, b) in back.samples().iter().zip(s.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_is_amplified_exponentially() {
        let key = AlmKey::new(vec![0.5; 8], -1.0, 1.0).unwrap();
        let s = SignalFrame::new(vec![0.6; 8]).unwrap();
        let delta = 0.2;
        let c: Vec<f64> = alm_encrypt(&s, &key).unwrap().samples().iter().map(|c| c + delta).collect();
        let back = alm_decrypt(&SignalFrame::new(c).unwrap(), &key).unwrap();
        // Error in the offset domain is offset(s)·(e^δ − 1), scaled back by the range.
        let want = key.offset(0.6) * (delta.exp() - 1.0) * 2.0;
        assert!((back.samples()[0] - 0.6 - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(AlmKey::new(vec![0.0; 8], 0.0, 1.0).is_err());
        assert!(AlmKey::new(vec![1.0; 8], 1.0, 1.0).is_err());
        let key = AlmKey::new(vec![1.0; 16], 0.0, 1.0).unwrap();
        assert!(alm_encrypt(&SignalFrame::zeros(8).unwrap(), &key).is_err());
    }
}
