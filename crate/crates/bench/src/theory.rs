//! Closed-form reference curves.

use statrs::function::erf::erfc;

/// Gray-coded square 16-QAM bit error rate over AWGN, nearest-neighbour
/// approximation, as a function of Es/N0 in dB.
pub fn qam16_ber(es_n0_db: f64) -> f64 {
    if es_n0_db == f64::INFINITY {
        return 0.0;
    }
    let es_n0 = 10f64.powf(es_n0_db / 10.0);
    0.375 * erfc((es_n0 / 10.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_q_function_form() {
        // 3/4·Q(sqrt(Es/(5·N0))) with Q(x) = erfc(x/√2)/2.
        for db in [0.0, 6.0, 10.0, 16.0] {
            let es_n0 = 10f64.powf(db / 10.0);
            let q = 0.5 * erfc((es_n0 / 5.0).sqrt() / std::f64::consts::SQRT_2);
            assert!((qam16_ber(db) - 0.75 * q).abs() < 1e-15);
        }
        assert!((qam16_ber(10.0) - 0.059).abs() < 5e-4);
        assert_eq!(qam16_ber(f64::INFINITY), 0.0);
    }
}
