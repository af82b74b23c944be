//! Overflow-free elementary functions used by every expectation.

use std::f64::consts::LN_2;

/// `log cosh x`, exact for large `|x|` where `cosh` itself overflows.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `sech² x = 1 − tanh² x`, computed without cancellation.
#[inline]
pub fn sech_sq(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

#[inline]
pub fn tanh_sq(x: f64) -> f64 {
    let t = x.tanh();
    t * t
}

/// `log Σ exp(v_i)`; returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_cosh_matches_naive_in_range() {
        for &x in &[-20.0, -3.0, -0.5, 0.0, 1e-8, 0.7, 4.0, 19.0] {
            let naive = f64::cosh(x).ln();
            assert!((log_cosh(x) - naive).abs() <= 1e-14 * naive.abs().max(1.0), "x={x}");
        }
        assert_eq!(log_cosh(0.0), 0.0);
        // cosh overflows here, log cosh does not
        assert!((log_cosh(1000.0) - (1000.0 - LN_2)).abs() < 1e-12);
    }

    #[test]
    fn sech_sq_is_complement_of_tanh_sq() {
        for &x in &[0.0, 0.1, 1.0, 3.0, -7.5] {
            assert!((sech_sq(x) + tanh_sq(x) - 1.0).abs() < 1e-15);
        }
        assert!(sech_sq(300.0) > 0.0);
    }

    #[test]
    fn lse_basic() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + LN_2)).abs() < 1e-12);
    }
}
