use super::{FamilyKind, MarginalFamily, Measure, UniformMeasure};
use std::sync::Arc;

/// `mu_t` uniform on `[-e^{2t}, e^t]`, `t` in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformFamily;

impl UniformFamily {
    pub fn new() -> Self {
        Self
    }

    /// Width `e^t + e^{2t}` of the support.
    #[inline]
    pub fn width(t: f64) -> f64 {
        let e = t.exp();
        e + e * e
    }

    #[inline]
    fn inside(t: f64, x: f64) -> bool {
        let e = t.exp();
        x >= -e * e && x <= e
    }
}

impl MarginalFamily for UniformFamily {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Uniform
    }
    fn t_min(&self) -> f64 {
        0.0
    }
    fn at(&self, t: f64) -> Arc<dyn Measure> {
        let e = t.exp();
        Arc::new(UniformMeasure::new(-e * e, e))
    }
    fn cdf(&self, t: f64, x: f64) -> f64 {
        let e = t.exp();
        ((x + e * e) / (e + e * e)).clamp(0.0, 1.0)
    }
    fn pdf(&self, t: f64, x: f64) -> f64 {
        if Self::inside(t, x) {
            1.0 / Self::width(t)
        } else {
            0.0
        }
    }
    fn quantile(&self, t: f64, u: f64) -> f64 {
        let e = t.exp();
        -e * e + u.clamp(0.0, 1.0) * (e + e * e)
    }
    fn support(&self, t: f64) -> (f64, f64) {
        let e = t.exp();
        (-e * e, e)
    }
    fn mean(&self, t: f64) -> f64 {
        let e = t.exp();
        0.5 * (e - e * e)
    }
    fn dt_cdf(&self, t: f64, x: f64) -> f64 {
        if !Self::inside(t, x) {
            return 0.0;
        }
        let e = t.exp();
        let e2 = e * e;
        let d = e + e2;
        let dd = e + 2.0 * e2;
        (2.0 * e2 * d - (x + e2) * dd) / (d * d)
    }
    fn dt_pdf(&self, t: f64, x: f64) -> f64 {
        if !Self::inside(t, x) {
            return 0.0;
        }
        let e = t.exp();
        let d = e + e * e;
        -(e + 2.0 * e * e) / (d * d)
    }
    fn support_rate(&self, t: f64) -> (f64, f64) {
        let e = t.exp();
        (-2.0 * e * e, e)
    }
    fn dt_put(&self, t: f64, k: f64) -> f64 {
        let e = t.exp();
        let e2 = e * e;
        if k <= -e2 {
            return 0.0;
        }
        if k >= e {
            return -self.dt_mean(t);
        }
        let d = e + e2;
        let dd = e + 2.0 * e2;
        let a = k + e2;
        a * 2.0 * e2 / d - a * a * dd / (2.0 * d * d)
    }
    fn dt_mean(&self, t: f64) -> f64 {
        let e = t.exp();
        0.5 * (e - 2.0 * e * e)
    }
}
