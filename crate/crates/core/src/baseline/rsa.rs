use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::{Quantizer, SignalFrame};

pub const DEFAULT_EXPONENT: u64 = 65_537;

/// Textbook RSA applied to each quantized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RsaSampleKey {
    modulus: u64,
    e: u64,
    d: u64,
    quantizer: Quantizer,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (i128::from(m), i128::from(a % m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(i128::from(m)) as u64)
}

fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    let m = u128::from(m);
    let mut b = u128::from(base) % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

impl RsaSampleKey {
    pub fn from_primes(p: u64, q: u64, e: u64, quantizer: Quantizer) -> Result<Self> {
        if !(is_prime(p) && is_prime(q)) || p == q {
            return Err(Error::Key(format!("{p} and {q} must be distinct primes")));
        }
        let modulus = p
            .checked_mul(q)
            .filter(|n| *n < 1 << 53)
            .ok_or_else(|| Error::Key("modulus too large for sample rescaling".into()))?;
        if modulus < u64::from(quantizer.levels()) {
            return Err(Error::Key(format!(
                "modulus {modulus} is smaller than {} quantizer levels",
                quantizer.levels()
            )));
        }
        let (pm, qm) = (p - 1, q - 1);
        let carmichael = pm / gcd(pm, qm) * qm;
        let d = mod_inverse(e, carmichael)
            .ok_or_else(|| Error::Key(format!("exponent {e} is not invertible")))?;
        Ok(Self {
            modulus,
            e,
            d,
            quantizer,
        })
    }

    /// Random 16-bit primes with the default public exponent.
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, quantizer: Quantizer) -> Self {
        let mut prime = || loop {
            let c = rng.random_range(1u64 << 15..1 << 16) | 1;
            if is_prime(c) {
                return c;
            }
        };
        loop {
            let (p, q) = (prime(), prime());
            if let Ok(key) = Self::from_primes(p, q, DEFAULT_EXPONENT, quantizer) {
                return key;
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn public_exponent(&self) -> u64 {
        self.e
    }

    pub fn private_exponent(&self) -> u64 {
        self.d
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn encrypt_index(&self, m: u64) -> u64 {
        mod_pow(m, self.e, self.modulus)
    }

    pub fn decrypt_index(&self, c: u64) -> u64 {
        mod_pow(c, self.d, self.modulus)
    }

    // Ciphertext residues are spread back over the quantizer's range.
    fn to_sample(&self, c: u64) -> f64 {
        let q = &self.quantizer;
        q.low() + (q.high() - q.low()) * c as f64 / (self.modulus - 1) as f64
    }

    fn sample_index(&self, y: f64) -> u64 {
        let q = &self.quantizer;
        let t = ((y - q.low()) / (q.high() - q.low()) * (self.modulus - 1) as f64).round();
        if t.is_nan() || t <= 0.0 {
            0
        } else {
            (t as u64).min(self.modulus - 1)
        }
    }
}

pub fn rsa_encrypt(s: &SignalFrame, key: &RsaSampleKey) -> Result<SignalFrame> {
    SignalFrame::new(
        s.samples()
            .iter()
            .map(|&x| key.to_sample(key.encrypt_index(u64::from(key.quantizer.index(x)))))
            .collect(),
    )
}

/// Residues beyond the quantizer's levels, which only corrupted
/// ciphertext produces, fold back modulo the level count.
pub fn rsa_decrypt(c: &SignalFrame, key: &RsaSampleKey) -> Result<SignalFrame> {
    let levels = u64::from(key.quantizer.levels());
    SignalFrame::new(
        c.samples()
            .iter()
            .map(|&y| {
                let m = key.decrypt_index(key.sample_index(y)) % levels;
                key.quantizer.value(m as u32)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quantizer() -> Quantizer {
        Quantizer::new(-4.5, 4.5, 4096).unwrap()
    }

    #[test]
    fn arithmetic_helpers() {
        assert_eq!(mod_pow(4, 13, 497), 445);
        assert_eq!(mod_inverse(17, 3120), Some(2753));
        assert_eq!(mod_inverse(6, 9), None);
        assert!(is_prime(65_521) && !is_prime(65_535));
    }

    #[test]
    fn textbook_example() {
        let key = RsaSampleKey::from_primes(61, 53, 17, Quantizer::new(0.0, 1.0, 64).unwrap()).unwrap();
        assert_eq!(key.modulus(), 3233);
        assert_eq!(key.private_exponent(), 413);
        assert_eq!(key.encrypt_index(65), 2790);
        assert_eq!(key.decrypt_index(2790), 65);
    }

    #[test]
    fn generated_keys_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let key = RsaSampleKey::generate(&mut rng, quantizer());
        assert!(key.modulus() >= 1 << 30);
        for m in [0, 1, 2, 1000, 4095] {
            assert_eq!(key.decrypt_index(key.encrypt_index(m)), m);
        }
        assert!(RsaSampleKey::from_primes(61, 61, 17, quantizer()).is_err());
        assert!(RsaSampleKey::from_primes(61, 53, 17, quantizer()).is_err());
    }
}
