//! Statistical oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use vpsc::{SignalFrame, SpectrumFrame};

/// Two-sided Kolmogorov–Smirnov p-value of `sample` against `cdf`.
pub fn ks_p_value(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    kolmogorov_survival((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_survival(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * t * t).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn uniform_cdf(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Pearson chi-square p-value for `values` on `[0, 1)` split into `bins`.
pub fn chi_square_uniform_p(values: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0u64; bins];
    for &v in values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

/// Wald–Wolfowitz runs test about the median; two-sided p-value.
pub fn runs_test_p(x: &[f64]) -> f64 {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let signs: Vec<bool> = x.iter().filter(|&&v| v != median).map(|&v| v > median).collect();
    let n1 = signs.iter().filter(|&&s| s).count() as f64;
    let n2 = signs.len() as f64 - n1;
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let n = n1 + n2;
    let mean = 2.0 * n1 * n2 / n + 1.0;
    let var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0));
    let z = (runs as f64 - mean) / var.sqrt();
    2.0 * (1.0 - Normal::standard().cdf(z.abs()))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn random_frame<R: Rng>(rng: &mut R, n: usize, amplitude: f64) -> SignalFrame {
    SignalFrame::new((0..n).map(|_| rng.random_range(-amplitude..amplitude)).collect()).unwrap()
}

/// Random symmetric spectrum with magnitudes on `[0, max)`.
pub fn random_spectrum<R: Rng>(rng: &mut R, n: usize, max: f64) -> SpectrumFrame {
    let mut m = vec![0.0; n];
    let mut a = vec![0.0; n];
    for k in 0..=n / 2 {
        m[k] = rng.random_range(0.0..max);
        if k == 0 || k == n / 2 {
            a[k] = if rng.random() { 0.0 } else { -std::f64::consts::PI };
        } else {
            a[k] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            m[n - k] = m[k];
            a[n - k] = -a[k];
        }
    }
    SpectrumFrame::from_polar(m, a).unwrap()
}

/// Largest absolute difference between two equally long slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Distance between two angles on the circle.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}
