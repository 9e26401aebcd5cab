use crate::cipher::BandMask;
use crate::error::{Error, Result};
use crate::keystream::Keystream;
use crate::spectral::{analyze, synthesize, SignalFrame, SpectrumFrame};

/// Permutation of the lower-half bins `0..=N/2`; conjugate bins follow.
///
/// `permutation[i]` is the bin that receives the content of bin `i`. DC
/// and Nyquist never move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FcsKey {
    permutation: Vec<usize>,
    frame_index: u64,
}

impl FcsKey {
    pub fn identity(n: usize) -> Result<Self> {
        crate::spectral::check_frame_len(n)?;
        Ok(Self {
            permutation: (0..=n / 2).collect(),
            frame_index: 0,
        })
    }

    pub fn from_permutation(permutation: Vec<usize>, frame_index: u64) -> Result<Self> {
        let half = permutation.len().saturating_sub(1);
        crate::spectral::check_frame_len(2 * half)?;
        let mut seen = vec![false; half + 1];
        for &p in &permutation {
            if p > half || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Key("scrambling permutation is not a bijection".into()));
            }
        }
        if permutation[0] != 0 || permutation[half] != half {
            return Err(Error::Key("DC and Nyquist bins must stay in place".into()));
        }
        Ok(Self {
            permutation,
            frame_index,
        })
    }

    /// Keystream-driven Fisher–Yates shuffle of the masked bins in
    /// `1..N/2`.
    pub fn generate(stream: &Keystream, frame_index: u64, mask: &BandMask) -> Result<Self> {
        let n = mask.len();
        let bins: Vec<usize> = (1..n / 2).filter(|&i| mask.contains(i)).collect();
        let draws = stream.frame_values(frame_index, bins.len())?;
        let mut shuffled = bins.clone();
        for i in (1..shuffled.len()).rev() {
            let j = ((draws[i] * (i + 1) as f64) as usize).min(i);
            shuffled.swap(i, j);
        }
        let mut permutation: Vec<usize> = (0..=n / 2).collect();
        for (&src, &dst) in bins.iter().zip(&shuffled) {
            permutation[src] = dst;
        }
        Self::from_permutation(permutation, frame_index)
    }

    pub fn frame_len(&self) -> usize {
        2 * (self.permutation.len() - 1)
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.permutation.len()];
        for (i, &p) in self.permutation.iter().enumerate() {
            inv[p] = i;
        }
        Self {
            permutation: inv,
            frame_index: self.frame_index,
        }
    }
}

fn scramble(s: &SignalFrame, key: &FcsKey) -> Result<SignalFrame> {
    let n = s.len();
    if key.frame_len() != n {
        return Err(Error::LengthMismatch {
            expected: key.frame_len(),
            actual: n,
        });
    }
    let (m, a) = analyze(s).into_parts();
    let (mut pm, mut pa) = (m.clone(), a.clone());
    for (src, &dst) in key.permutation.iter().enumerate() {
        pm[dst] = m[src];
        pa[dst] = a[src];
        if dst != 0 && dst != n / 2 {
            pm[n - dst] = m[n - src];
            pa[n - dst] = a[n - src];
        }
    }
    synthesize(&SpectrumFrame::from_polar(pm, pa)?)
}

/// Moves each masked bin's content to its permuted position.
pub fn fcs_encrypt(s: &SignalFrame, key: &FcsKey) -> Result<SignalFrame> {
    scramble(s, key)
}

pub fn fcs_decrypt(s: &SignalFrame, key: &FcsKey) -> Result<SignalFrame> {
    scramble(s, &key.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keystream::SyncConfig;

    #[test]
    fn rejects_non_bijections() {
        assert!(FcsKey::from_permutation(vec![0, 1, 1, 3, 4], 0).is_err());
        assert!(FcsKey::from_permutation(vec![0, 2, 1, 4, 3], 0).is_err());
        assert!(FcsKey::from_permutation(vec![0, 3, 1, 2, 4], 0).is_ok());
        assert!(FcsKey::from_permutation(vec![0, 3, 9, 2, 4], 0).is_err());
    }

    #[test]
    fn generated_key_respects_mask() {
        let stream = Keystream::new(&SyncConfig::for_stream(64, 1000.0, b"fcs".to_vec())).unwrap();
        let mask = BandMask::band(64, 5, 20).unwrap();
        let key = FcsKey::generate(&stream, 2, &mask).unwrap();
        for (i, &p) in key.permutation().iter().enumerate() {
            assert_eq!(mask.contains(i) && i > 0, mask.contains(p) && p > 0);
        }
        assert_ne!(key, FcsKey::identity(64).unwrap());
        assert_eq!(key.inverse().inverse(), key);
    }
}
