//! Shared link setup: modem, keystream and the cipher under test.

use rand::Rng;
use vpsc::baseline::{
    alm_decrypt, alm_encrypt, fcs_decrypt, fcs_encrypt, rsa_decrypt, rsa_encrypt, AlmKey, FcsKey,
    RsaSampleKey,
};
use vpsc::cipher::{decrypt_frame, encrypt_frame};
use vpsc::modem::{max_symbol_magnitude, nominal_symbol_power, ModemConfig};
use vpsc::spectral::Quantizer;
use vpsc::{BandMask, CipherConfig, Keystream, SignalFrame, SyncConfig};

use crate::spec::{CipherKind, ExperimentSpec};
use crate::Result;

/// Everything both ends agree on before the first symbol.
#[derive(Debug, Clone)]
pub struct Link {
    pub modem: ModemConfig,
    pub n: usize,
    /// Mean per-sample power of a clean symbol.
    pub nominal_power: f64,
    pub phi: f64,
    pub mask: BandMask,
    pub sync: SyncConfig,
    pub stream: Keystream,
    pub sample_low: f64,
    pub sample_high: f64,
    pub rsa_levels: usize,
}

impl Link {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        Self::with_secret(spec, spec.secret()?)
    }

    pub fn with_secret(spec: &ExperimentSpec, secret: Vec<u8>) -> Result<Self> {
        let modem = spec.modem.config();
        modem.validate()?;
        let n = modem.symbol_samples();
        let phi = match spec.vpsc.phi {
            Some(phi) => phi,
            None => spec.vpsc.phi_margin * max_symbol_magnitude(&modem)?,
        };
        let sync = SyncConfig::for_stream(n, modem.sample_rate_hz, secret);
        let stream = Keystream::new(&sync)?;
        Ok(Self {
            modem,
            n,
            nominal_power: nominal_symbol_power(&modem)?,
            phi,
            mask: spec.band_mask()?,
            sync,
            stream,
            sample_low: spec.baseline.sample_low,
            sample_high: spec.baseline.sample_high,
            rsa_levels: spec.baseline.rsa_levels,
        })
    }

    /// Per-sample SNR giving the requested Es/N0 for one symbol of `n`
    /// samples.
    pub fn per_sample_snr_db(&self, es_n0_db: f64) -> f64 {
        es_n0_db - 10.0 * (self.n as f64 / 2.0).log10()
    }

    /// Noise deviation per sample at a per-sample SNR, relative to the
    /// nominal symbol power.
    pub fn sample_sigma(&self, per_sample_snr_db: f64) -> f64 {
        if per_sample_snr_db == f64::INFINITY {
            0.0
        } else {
            (self.nominal_power / 10f64.powf(per_sample_snr_db / 10.0)).sqrt()
        }
    }

    /// Deviation of each real component of a DFT bin for white noise of
    /// per-sample deviation `sigma`.
    pub fn bin_sigma(&self, sigma: f64) -> f64 {
        sigma * (self.n as f64 / 2.0).sqrt()
    }

    /// VPSC parameters tuned to the expected channel noise.
    pub fn vpsc_config(&self, spec: &ExperimentSpec, sample_sigma: f64) -> Result<CipherConfig> {
        let v = &spec.vpsc;
        let sigma0 = self.bin_sigma(sample_sigma);
        let floor = v.lambda_floor * self.phi;
        let lambda = v.lambda.unwrap_or((v.lambda_sigmas * sigma0).max(floor));
        let psi = (f64::from(v.psi_multiplier) * sigma0).max(floor);
        let cfg = CipherConfig::new(self.n, self.phi)?
            .with_mode(spec.mode())
            .with_band_mask(self.mask.clone())
            .with_lambda(lambda)
            .with_noise_sigma(psi / f64::from(v.psi_multiplier), v.psi_multiplier);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn quantizer(&self) -> Result<Quantizer> {
        Ok(Quantizer::new(self.sample_low, self.sample_high, self.rsa_levels as u32)?)
    }

    /// The cipher of kind `kind`. Stream ciphers key each frame from the
    /// link's keystream; RSA draws one fixed key from `rng`.
    pub fn cipher<R: Rng + ?Sized>(
        &self,
        kind: CipherKind,
        spec: &ExperimentSpec,
        sample_sigma: f64,
        rng: &mut R,
    ) -> Result<FrameCipher> {
        Ok(match kind {
            CipherKind::None => FrameCipher::None,
            CipherKind::Vpsc => FrameCipher::Vpsc(self.vpsc_config(spec, sample_sigma)?),
            CipherKind::Fcs => FrameCipher::Fcs(None),
            CipherKind::Alm => FrameCipher::Alm(None),
            CipherKind::Rsa => FrameCipher::Rsa(RsaSampleKey::generate(rng, self.quantizer()?)),
        })
    }
}

/// A cipher ready to process frames by index.
#[derive(Debug, Clone)]
pub enum FrameCipher {
    None,
    Vpsc(CipherConfig),
    /// `None` draws a fresh permutation per frame.
    Fcs(Option<FcsKey>),
    /// `None` draws fresh factors per frame.
    Alm(Option<AlmKey>),
    Rsa(RsaSampleKey),
}

impl FrameCipher {
    pub fn kind(&self) -> CipherKind {
        match self {
            Self::None => CipherKind::None,
            Self::Vpsc(_) => CipherKind::Vpsc,
            Self::Fcs(_) => CipherKind::Fcs,
            Self::Alm(_) => CipherKind::Alm,
            Self::Rsa(_) => CipherKind::Rsa,
        }
    }

    pub fn encrypt(&self, link: &Link, frame_index: u64, s: &SignalFrame) -> Result<SignalFrame> {
        Ok(match self {
            Self::None => s.clone(),
            Self::Vpsc(cfg) => {
                let key = link.stream.key_frame(frame_index, link.n, cfg.phi_effective())?;
                encrypt_frame(s, &key, cfg)?
            }
            Self::Fcs(key) => fcs_encrypt(s, &self.fcs_key(link, key, frame_index)?)?,
            Self::Alm(key) => alm_encrypt(s, &self.alm_key(link, key, frame_index)?)?,
            Self::Rsa(key) => rsa_encrypt(s, key)?,
        })
    }

    pub fn decrypt(&self, link: &Link, frame_index: u64, c: &SignalFrame) -> Result<SignalFrame> {
        Ok(match self {
            Self::None => c.clone(),
            Self::Vpsc(cfg) => {
                let key = link.stream.key_frame(frame_index, link.n, cfg.phi_effective())?;
                decrypt_frame(c, &key, cfg)?
            }
            Self::Fcs(key) => fcs_decrypt(c, &self.fcs_key(link, key, frame_index)?)?,
            Self::Alm(key) => alm_decrypt(c, &self.alm_key(link, key, frame_index)?)?,
            Self::Rsa(key) => rsa_decrypt(c, key)?,
        })
    }

    fn fcs_key(&self, link: &Link, fixed: &Option<FcsKey>, frame_index: u64) -> Result<FcsKey> {
        match fixed {
            Some(k) => Ok(k.clone()),
            None => Ok(FcsKey::generate(&link.stream, frame_index, &link.mask)?),
        }
    }

    fn alm_key(&self, link: &Link, fixed: &Option<AlmKey>, frame_index: u64) -> Result<AlmKey> {
        match fixed {
            Some(k) => Ok(k.clone()),
            None => Ok(AlmKey::generate(
                &link.stream,
                frame_index,
                link.n,
                link.sample_low,
                link.sample_high,
            )?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use vpsc::modem::{demodulate, modulate};

    #[test]
    fn noiseless_round_trip_for_every_cipher() {
        let spec = ExperimentSpec::default();
        let link = Link::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in CipherKind::ALL {
            let cipher = link.cipher(kind, &spec, 0.0, &mut rng).unwrap();
            assert_eq!(cipher.kind(), kind);
            for f in 0..8u64 {
                let bits = [f & 1 == 1, f & 2 == 2, f & 4 == 4, f % 3 == 0];
                let s = modulate(bits, &link.modem).unwrap();
                let c = cipher.encrypt(&link, f, &s).unwrap();
                let d = cipher.decrypt(&link, f, &c).unwrap();
                assert_eq!(demodulate(&d, &link.modem), bits, "{kind} frame {f}");
            }
        }
    }

    #[test]
    fn snr_conversions() {
        let link = Link::new(&ExperimentSpec::default()).unwrap();
        assert!((link.nominal_power - 5.0).abs() < 1e-9);
        // Es/N0 = N·P/(2σ²).
        let es_n0_db = 10.0;
        let sigma = link.sample_sigma(link.per_sample_snr_db(es_n0_db));
        let es_n0 = link.n as f64 * link.nominal_power / (2.0 * sigma * sigma);
        assert!((10.0 * es_n0.log10() - es_n0_db).abs() < 1e-9);
        assert_eq!(link.sample_sigma(f64::INFINITY), 0.0);
    }

    #[test]
    fn lambda_follows_noise_with_floor() {
        let spec = ExperimentSpec::default();
        let link = Link::new(&spec).unwrap();
        let quiet = link.vpsc_config(&spec, 0.0).unwrap();
        assert!((quiet.lambda - 1e-3 * link.phi).abs() < 1e-12);
        let noisy = link.vpsc_config(&spec, 2.0).unwrap();
        assert!((noisy.lambda - 10.0 * 2.0 * 128f64.sqrt()).abs() < 1e-9);
        assert!((noisy.psi - noisy.lambda).abs() < 1e-9);
    }
}
