//! Standard normal distribution helpers with accurate tails.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function, accurate in the lower tail.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Phi(z)`, accurate in the upper tail.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Inverse of [`norm_cdf`] for `p` in `(0, 1)`.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let z = if p < 0.5 {
        -SQRT_2 * erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - p))
    };
    polish(z, p)
}

/// Inverse of [`norm_sf`] for `q` in `(0, 1)`.
#[inline]
pub fn norm_isf(q: f64) -> f64 {
    -norm_ppf(q)
}

/// One Halley step on `Phi(z) = p`.
fn polish(z: f64, p: f64) -> f64 {
    if !z.is_finite() {
        return z;
    }
    let d = norm_pdf(z);
    if d < 1e-300 {
        return z;
    }
    let step = (norm_cdf(z) - p) / d;
    z - step / (1.0 + 0.5 * z * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_symmetry_and_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        let e = (norm_cdf(1.0) - 0.841_344_746_068_542_9).abs();
        assert!(e < 4e-16, "{e}");
        assert!((norm_sf(1.0) + norm_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((norm_sf(10.0) - 7.619_853_024_160_527e-24).abs() < 1e-36);
    }

    #[test]
    fn ppf_roundtrip() {
        for &p in &[1e-15, 1e-10, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-12] {
            let z = norm_ppf(p);
            assert!((norm_cdf(z) - p).abs() <= 1e-14 * p.max(1e-3), "p={p}");
        }
        for &q in &[1e-300, 1e-20, 1e-10, 0.2, 0.5, 0.9] {
            let z = norm_isf(q);
            let rel = (norm_sf(z) - q).abs() / q;
            assert!(rel < 1e-12, "q={q} rel={rel}");
        }
    }
}
