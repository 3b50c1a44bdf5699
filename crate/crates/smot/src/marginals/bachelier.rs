use super::{FamilyKind, MarginalFamily, Measure, NormalMeasure};
use crate::error::{Result, SmotError};
use crate::numerics::special::{norm_cdf, norm_pdf, norm_ppf};
use std::sync::Arc;

/// `mu_t = N(-t, t)` on `[delta, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct BachelierFamily {
    delta: f64,
}

impl BachelierFamily {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SmotError::InvalidInput(format!(
                "bachelier family needs 0 < delta < 1, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    #[inline]
    fn z(t: f64, x: f64) -> f64 {
        (x + t) / t.sqrt()
    }

    #[inline]
    fn dz_dt(t: f64, x: f64) -> f64 {
        (t - x) / (2.0 * t * t.sqrt())
    }
}

impl MarginalFamily for BachelierFamily {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Bachelier
    }
    fn t_min(&self) -> f64 {
        self.delta
    }
    fn at(&self, t: f64) -> Arc<dyn Measure> {
        Arc::new(NormalMeasure::new(-t, t.sqrt()))
    }
    fn cdf(&self, t: f64, x: f64) -> f64 {
        norm_cdf(Self::z(t, x))
    }
    fn pdf(&self, t: f64, x: f64) -> f64 {
        norm_pdf(Self::z(t, x)) / t.sqrt()
    }
    fn quantile(&self, t: f64, u: f64) -> f64 {
        -t + t.sqrt() * norm_ppf(super::measures::clamp_level(u))
    }
    fn support(&self, _t: f64) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn mean(&self, t: f64) -> f64 {
        -t
    }
    fn dt_cdf(&self, t: f64, x: f64) -> f64 {
        norm_pdf(Self::z(t, x)) * Self::dz_dt(t, x)
    }
    fn dt_pdf(&self, t: f64, x: f64) -> f64 {
        let z = Self::z(t, x);
        let phi = norm_pdf(z);
        let st = t.sqrt();
        -z * phi * Self::dz_dt(t, x) / st - 0.5 * phi / (t * st)
    }
    fn dt_put(&self, t: f64, k: f64) -> f64 {
        let d = Self::z(t, k);
        norm_cdf(d) + norm_pdf(d) / (2.0 * t.sqrt())
    }
    fn dt_mean(&self, _t: f64) -> f64 {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        let f = BachelierFamily::new(0.05).unwrap();
        for &t in &[0.1, 0.5, 1.0] {
            assert!((f.cdf(t, -t) - 0.5).abs() < 1e-15);
            assert_eq!(f.mean(t), -t);
        }
    }

    #[test]
    fn dt_cdf_matches_fd_at_reference_point() {
        let f = BachelierFamily::new(0.05).unwrap();
        let h = 1e-5;
        let fd = (f.cdf(1.0 + h, -1.0) - f.cdf(1.0 - h, -1.0)) / (2.0 * h);
        assert!((fd - f.dt_cdf(1.0, -1.0)).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(BachelierFamily::new(0.0).is_err());
        assert!(BachelierFamily::new(-0.1).is_err());
    }
}
