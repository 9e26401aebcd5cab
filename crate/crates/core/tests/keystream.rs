mod common;

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes256;
use common::{chi_square_uniform_p, ks_p_value, random_spectrum, uniform_cdf};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use vpsc::cipher::{encrypt_spectrum, CipherConfig, Mode};
use vpsc::keystream::{key_frame, Keystream, SyncConfig, VALUES_PER_BLOCK};

fn cfg(seed: &[u8]) -> SyncConfig {
    SyncConfig::for_stream(256, 64_000.0, seed.to_vec())
}

/// AES-256-CTR over big-endian counter blocks, written against the block
/// cipher directly.
fn oracle_values(seed: &[u8], first_counter: u64, blocks: u64) -> Vec<f64> {
    let aes = Aes256::new_from_slice(&Sha256::digest(seed)).unwrap();
    let mut out = Vec::new();
    for c in first_counter..first_counter + blocks {
        let mut block = aes::Block::from((c as u128).to_be_bytes());
        aes.encrypt_block(&mut block);
        for chunk in block.chunks(8) {
            let w = u64::from_le_bytes(chunk.try_into().unwrap());
            out.push((w >> 11) as f64 / 9_007_199_254_740_992.0);
        }
    }
    out
}

#[test]
fn golden_values() {
    // Produced by an unrelated AES-256 implementation from the same seed.
    let want = [
        0.9238652047531096,
        0.7841808277455934,
        0.12241584107683745,
        0.6786147990418943,
    ];
    let ks = Keystream::new(&cfg(b"golden fixture seed")).unwrap();
    assert_eq!(ks.raw_values(0, 4).unwrap(), want);
    assert_eq!(ks.raw_values(0, 4).unwrap(), ks.raw_values(0, 4).unwrap());
}

#[test]
fn chi_square_uniformity() {
    let ks = Keystream::new(&cfg(b"chi square")).unwrap();
    let values = ks.raw_values(12_345, 1_000_000).unwrap();
    assert!(values.iter().all(|v| (0.0..1.0).contains(v)));
    let p = chi_square_uniform_p(&values, 1000);
    assert!(p > 0.001 && p < 0.999, "p = {p}");
}

#[test]
fn random_access_matches_sequential() {
    let c = cfg(b"sequential");
    let ks = Keystream::new(&c).unwrap();
    let u = c.counters_per_frame;
    let oracle = oracle_values(&c.secret_seed, 0, 1000 * u);
    let seq: Vec<_> = ks.frames(256, 7.5).unwrap().take(1000).collect();
    for (f, frame) in seq.iter().enumerate() {
        let direct = ks.key_frame(f as u64, 256, 7.5).unwrap();
        assert_eq!(&direct, frame);
        let values = &oracle[f * 256..(f + 1) * 256];
        assert_eq!(direct.magnitude()[1], values[0] * 7.5);
        assert_eq!(direct.magnitude()[128], values[127] * 7.5);
    }
}

#[test]
fn seed_counter_shifts_the_oracle() {
    let mut c = cfg(b"offset");
    c.seed_counter = 999;
    let ks = Keystream::new(&c).unwrap();
    let oracle = oracle_values(&c.secret_seed, 999 + 2 * c.counters_per_frame, 1);
    assert_eq!(ks.frame_values(2, 2).unwrap(), oracle);
}

#[test]
fn magnitude_keys_are_uniform_per_bin() {
    let n = 16;
    let phi = 3.0;
    let c = SyncConfig::for_stream(n, 1000.0, b"ks uniform".to_vec());
    let ks = Keystream::new(&c).unwrap();
    let frames: Vec<_> = ks.frames(n, phi).unwrap().take(100_000).collect();
    for bin in [1, 5, 8] {
        let sample: Vec<f64> = frames.iter().map(|k| k.magnitude()[bin]).collect();
        let p = ks_p_value(&sample, uniform_cdf(0.0, phi));
        assert!(p > 0.001, "bin {bin}: p = {p}");
    }
    let angles: Vec<f64> = frames.iter().map(|k| k.angle()[3]).collect();
    let p = ks_p_value(&angles, uniform_cdf(-std::f64::consts::PI, std::f64::consts::PI));
    assert!(p > 0.001, "angles: p = {p}");
}

#[test]
fn generated_keys_keep_ciphertext_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = cfg(b"realness");
    for mode in [Mode::Plain, Mode::PreemptiveRise, Mode::Combined] {
        let cipher = CipherConfig::new(256, 50.0)
            .unwrap()
            .with_mode(mode)
            .with_lambda(2.0)
            .with_psi(1.5);
        for f in 0..50 {
            let key = key_frame(&c, f, 256, cipher.phi_effective()).unwrap();
            let ct = encrypt_spectrum(&random_spectrum(&mut rng, 256, 50.0), &key, &cipher).unwrap();
            assert!(ct.check_symmetry().is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_reads_concatenate(c in 0u64..1_000_000, blocks in 0usize..20, b in 0usize..40) {
        let ks = Keystream::new(&cfg(b"split")).unwrap();
        let a = blocks * VALUES_PER_BLOCK;
        let whole = ks.raw_values(c, a + b).unwrap();
        let head = ks.raw_values(c, a).unwrap();
        let tail = ks.raw_values(c + a.div_ceil(VALUES_PER_BLOCK) as u64, b).unwrap();
        prop_assert_eq!(whole, [head, tail].concat());
    }

    #[test]
    fn key_structure(f in 0u64..10_000, phi in 0.01..1e4f64, log_n in 3u32..10) {
        let n = 1usize << log_n;
        let c = SyncConfig::for_stream(n, 1000.0, b"structure".to_vec());
        let k = key_frame(&c, f, n, phi).unwrap();
        let (m, a) = (k.magnitude(), k.angle());
        prop_assert_eq!(m[0], 0.0);
        prop_assert_eq!(a[0], 0.0);
        prop_assert_eq!(a[n / 2], 0.0);
        for i in 1..n / 2 {
            prop_assert_eq!(m[i], m[n - i]);
            prop_assert!(a[i] == -a[n - i] || (a[i] == -std::f64::consts::PI && a[n - i] == a[i]));
        }
        prop_assert!(m.iter().all(|v| (0.0..phi).contains(v)));
        prop_assert!(a.iter().all(|v| (-std::f64::consts::PI..std::f64::consts::PI).contains(v)));
    }
}
