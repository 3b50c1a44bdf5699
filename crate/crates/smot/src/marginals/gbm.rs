use super::{FamilyKind, LogNormalMeasure, MarginalFamily, Measure};
use crate::error::{Result, SmotError};
use crate::numerics::special::{norm_cdf, norm_pdf, norm_ppf};
use std::sync::Arc;

/// `mu_t = LogNormal(-t, t)` (log-mean `-t`, log-variance `t`) on `[delta, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct GbmFamily {
    delta: f64,
}

impl GbmFamily {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SmotError::InvalidInput(format!(
                "gbm family needs 0 < delta < 1, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    #[inline]
    fn z(t: f64, x: f64) -> f64 {
        (x.ln() + t) / t.sqrt()
    }

    #[inline]
    fn dz_dt(t: f64, x: f64) -> f64 {
        (t - x.ln()) / (2.0 * t * t.sqrt())
    }
}

impl MarginalFamily for GbmFamily {
    fn kind(&self) -> FamilyKind {
        FamilyKind::Gbm
    }
    fn t_min(&self) -> f64 {
        self.delta
    }
    fn at(&self, t: f64) -> Arc<dyn Measure> {
        Arc::new(LogNormalMeasure::new(-t, t.sqrt()))
    }
    fn cdf(&self, t: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_cdf(Self::z(t, x))
        }
    }
    fn pdf(&self, t: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_pdf(Self::z(t, x)) / (x * t.sqrt())
        }
    }
    fn quantile(&self, t: f64, u: f64) -> f64 {
        (-t + t.sqrt() * norm_ppf(super::measures::clamp_level(u))).exp()
    }
    fn support(&self, _t: f64) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn mean(&self, t: f64) -> f64 {
        (-0.5 * t).exp()
    }
    fn dt_cdf(&self, t: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            norm_pdf(Self::z(t, x)) * Self::dz_dt(t, x)
        }
    }
    fn dt_pdf(&self, t: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = Self::z(t, x);
        let phi = norm_pdf(z);
        let st = t.sqrt();
        (-z * phi * Self::dz_dt(t, x) - 0.5 * phi / t) / (x * st)
    }
    fn dt_put(&self, t: f64, k: f64) -> f64 {
        if k <= 0.0 {
            return 0.0;
        }
        let st = t.sqrt();
        let w = k.ln() / st;
        let m = (-0.5 * t).exp();
        0.5 * m * norm_cdf(w) + m * norm_pdf(w) / (2.0 * st)
    }
    fn dt_mean(&self, t: f64) -> f64 {
        -0.5 * (-0.5 * t).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::norm_cdf;

    #[test]
    fn median_mean_quantile() {
        let f = GbmFamily::new(0.05).unwrap();
        for &t in &[0.1, 0.5, 1.0] {
            assert!((f.cdf(t, (-t).exp()) - 0.5).abs() < 1e-15);
            assert!((f.mean(t) - (-t / 2.0).exp()).abs() < 1e-15);
            let q = f.quantile(t, norm_cdf(1.0));
            assert!((q - (t.sqrt() - t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn density_vanishes_off_support() {
        let f = GbmFamily::new(0.05).unwrap();
        assert_eq!(f.pdf(0.5, 0.0), 0.0);
        assert_eq!(f.pdf(0.5, -1.0), 0.0);
        assert!(GbmFamily::new(0.0).is_err());
    }
}
