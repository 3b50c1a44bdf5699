//! Closed-form one-dimensional measures.

use super::Measure;
use crate::numerics::special::{norm_cdf, norm_isf, norm_pdf, norm_ppf, norm_sf};

/// Quantile levels are clamped to this band for unbounded supports.
pub const U_CLAMP: f64 = 1e-12;

pub(crate) fn clamp_level(u: f64) -> f64 {
    u.clamp(U_CLAMP, 1.0 - U_CLAMP)
}

/// Uniform probability measure on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMeasure {
    pub a: f64,
    pub b: f64,
}

impl UniformMeasure {
    pub fn new(a: f64, b: f64) -> Self {
        assert!(b > a, "uniform measure needs a < b");
        Self { a, b }
    }
}

impl Measure for UniformMeasure {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
    fn sf(&self, x: f64) -> f64 {
        ((self.b - x) / (self.b - self.a)).clamp(0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        if x >= self.a && x <= self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        self.a + u.clamp(0.0, 1.0) * (self.b - self.a)
    }
    fn isf(&self, q: f64) -> f64 {
        self.b - q.clamp(0.0, 1.0) * (self.b - self.a)
    }
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn mean(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    fn upper_moment(&self, x: f64) -> f64 {
        let lo = x.clamp(self.a, self.b);
        0.5 * (self.b - lo) * (self.b + lo) / (self.b - self.a)
    }
    fn scale_hint(&self) -> (f64, f64) {
        (self.mean(), 0.5 * (self.b - self.a))
    }
}

/// Normal probability measure with mean `m` and standard deviation `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMeasure {
    pub m: f64,
    pub s: f64,
}

impl NormalMeasure {
    pub fn new(m: f64, s: f64) -> Self {
        assert!(s > 0.0, "normal measure needs s > 0");
        Self { m, s }
    }
}

impl Measure for NormalMeasure {
    fn cdf(&self, x: f64) -> f64 {
        norm_cdf((x - self.m) / self.s)
    }
    fn sf(&self, x: f64) -> f64 {
        norm_sf((x - self.m) / self.s)
    }
    fn pdf(&self, x: f64) -> f64 {
        norm_pdf((x - self.m) / self.s) / self.s
    }
    fn quantile(&self, u: f64) -> f64 {
        self.m + self.s * norm_ppf(clamp_level(u))
    }
    fn isf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::INFINITY;
        }
        if q >= 1.0 {
            return f64::NEG_INFINITY;
        }
        self.m + self.s * norm_isf(q)
    }
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn mean(&self) -> f64 {
        self.m
    }
    fn upper_moment(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return self.m;
        }
        let d = (x - self.m) / self.s;
        self.m * norm_sf(d) + self.s * norm_pdf(d)
    }
    fn scale_hint(&self) -> (f64, f64) {
        (self.m, self.s)
    }
}

/// Log-normal probability measure: `exp(m + s Z)` with `Z` standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalMeasure {
    pub m: f64,
    pub s: f64,
}

impl LogNormalMeasure {
    pub fn new(m: f64, s: f64) -> Self {
        assert!(s > 0.0, "log-normal measure needs s > 0");
        Self { m, s }
    }
}

impl Measure for LogNormalMeasure {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_cdf((x.ln() - self.m) / self.s)
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            norm_sf((x.ln() - self.m) / self.s)
        }
    }
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_pdf((x.ln() - self.m) / self.s) / (x * self.s)
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        (self.m + self.s * norm_ppf(clamp_level(u))).exp()
    }
    fn isf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::INFINITY;
        }
        if q >= 1.0 {
            return 0.0;
        }
        (self.m + self.s * norm_isf(q)).exp()
    }
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn mean(&self) -> f64 {
        (self.m + 0.5 * self.s * self.s).exp()
    }
    fn upper_moment(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.mean();
        }
        self.mean() * norm_cdf((self.m + self.s * self.s - x.ln()) / self.s)
    }
    fn scale_hint(&self) -> (f64, f64) {
        let med = self.m.exp();
        (med, med * self.s.max(0.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate_inf, QUAD_TOL};

    fn numeric_upper_moment(m: &dyn Measure, x: f64) -> f64 {
        let (c, s) = m.scale_hint();
        let (_, r) = m.support();
        integrate_inf(|z| z * m.pdf(z), x, r, c, s, QUAD_TOL * 1e-2).value
    }

    #[test]
    fn upper_moments_match_quadrature() {
        let ms: Vec<Box<dyn Measure>> = vec![
            Box::new(UniformMeasure::new(-4.0, 2.0)),
            Box::new(NormalMeasure::new(-0.5, 0.7)),
            Box::new(LogNormalMeasure::new(-0.5, 0.7)),
        ];
        for m in &ms {
            for &x in &[-1.0f64, 0.1, 0.5, 1.3] {
                let lo = x.max(m.support().0);
                let a = m.upper_moment(x);
                let b = numeric_upper_moment(m.as_ref(), lo);
                assert!((a - b).abs() < 1e-9, "{m:?} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let ms: Vec<Box<dyn Measure>> = vec![
            Box::new(UniformMeasure::new(-4.0, 2.0)),
            Box::new(NormalMeasure::new(-0.5, 0.7)),
            Box::new(LogNormalMeasure::new(-0.5, 0.7)),
        ];
        for m in &ms {
            for k in 1..100 {
                let u = k as f64 / 100.0;
                let x = m.quantile(u);
                assert!((m.cdf(x) - u).abs() < 1e-12);
                let y = m.isf(u);
                assert!((m.sf(y) - u).abs() < 1e-12);
            }
        }
    }
}
