//! Closed forms and single-equation solvers for the built-in families.

use crate::error::{Result, SmotError};
use crate::numerics::roots::{newton_bracketed, X_TOL};
use crate::numerics::special::{norm_pdf, norm_sf};

pub fn uniform_x1(t: f64) -> f64 {
    let e = t.exp();
    -e / (1.0 + 2.0 * e)
}

pub fn uniform_m(t: f64) -> f64 {
    t.exp()
}

/// Drift rate below `x1(t)` for the uniform family.
pub fn uniform_jd_super(t: f64, x: f64) -> f64 {
    let e = t.exp();
    (e * e - x * (1.0 + 2.0 * e)) / (1.0 + e)
}

/// Intensity of upward jumps on the uniform martingale band.
pub fn uniform_intensity(t: f64) -> f64 {
    let e = t.exp();
    0.5 * (1.0 + 2.0 * e) / (1.0 + e)
}

pub fn uniform_jd_band(t: f64, x: f64) -> f64 {
    uniform_intensity(t) * (t.exp() - x)
}

pub fn bachelier_m(t: f64) -> f64 {
    (t * (t + 1.0)).sqrt()
}

pub fn gbm_m(t: f64) -> f64 {
    (t * (t + 1.0)).sqrt().exp()
}

pub fn bachelier_jd_super(t: f64, x: f64) -> f64 {
    (t - x) / (2.0 * t)
}

pub fn gbm_jd_super(t: f64, x: f64) -> f64 {
    x * (t - x.ln()) / (2.0 * t)
}

/// Root `z` of `a * (1 - Phi(z)) = phi(z)` on `(-10, a)`.
fn mills_root(a: f64, context: &'static str) -> Result<f64> {
    let f = |z: f64| a * norm_sf(z) - norm_pdf(z);
    let lo = -10.0;
    let hi = a;
    let (flo, fhi) = (f(lo), f(hi));
    newton_bracketed(
        |z| (a * norm_sf(z) - norm_pdf(z), norm_pdf(z) * (z - a)),
        lo,
        hi,
        flo,
        fhi,
        0.0f64.min(a - 1.0),
        X_TOL * 1e-3,
        200,
    )
    .map_err(|e| SmotError::root(context, e))
}

/// Bachelier phase point: `x = sqrt(t) z - t` where `2 sqrt(t) (1 - Phi(z)) = phi(z)`.
pub fn bachelier_x1(t: f64) -> Result<f64> {
    let st = t.sqrt();
    Ok(st * mills_root(2.0 * st, "bachelier phase point")? - t)
}

/// GBM phase point: `x = exp(sqrt(t) y)` where `sqrt(t) (1 - Phi(y)) = phi(y)`.
pub fn gbm_x1(t: f64) -> Result<f64> {
    let st = t.sqrt();
    Ok((st * mills_root(st, "gbm phase point")?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::roots::bisect;

    #[test]
    fn uniform_values() {
        assert!((uniform_x1(0.0) + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(uniform_m(0.0), 1.0);
        assert!((uniform_jd_super(0.0, -0.5) - 1.25).abs() < 1e-15);
        assert!((uniform_intensity(0.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn built_in_boundaries() {
        assert!((bachelier_m(1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((gbm_m(1.0) - 4.1132503787829275).abs() < 1e-12);
        assert_eq!(bachelier_jd_super(0.4, 0.4), 0.0);
    }

    #[test]
    fn bachelier_x1_matches_bisection() {
        let z = bisect(|z| 2.0 * norm_sf(z) - norm_pdf(z), -8.0, 2.0, 1e-15).unwrap();
        assert!((bachelier_x1(1.0).unwrap() - (z - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn gbm_x1_matches_bisection() {
        let t: f64 = 0.5;
        let st = t.sqrt();
        let y = bisect(|y| norm_sf(y) - norm_pdf(y) / st, -8.0, st, 1e-15).unwrap();
        assert!((gbm_x1(t).unwrap() - (st * y).exp()).abs() < 1e-12);
    }
}
