//! Time-indexed marginal families `t -> mu_t` and the measures they produce.
//!
//! A [`MarginalFamily`] exposes the distribution function, density, quantile,
//! their time derivatives and the support of each `mu_t`. Three closed-form
//! families (uniform, Bachelier, geometric Brownian motion) are provided along
//! with a tabulated family read from density samples.

mod bachelier;
mod gbm;
pub mod measures;
mod tabulated;
mod uniform;

pub use bachelier::BachelierFamily;
pub use gbm::GbmFamily;
pub use measures::{LogNormalMeasure, NormalMeasure, UniformMeasure, U_CLAMP};
pub use tabulated::{InterpolatedMeasure, PiecewiseLinearDensity, TabulatedFamily};
pub use uniform::UniformFamily;

use crate::error::{Result, SmotError};
use crate::numerics::quad::{integrate_inf, QUAD_TOL};
use crate::numerics::roots;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::path::PathBuf;
use std::sync::Arc;

/// A finite measure on the real line with a density.
pub trait Measure: Send + Sync + Debug {
    fn cdf(&self, x: f64) -> f64;
    /// Mass strictly above `x`.
    fn sf(&self, x: f64) -> f64 {
        self.mass() - self.cdf(x)
    }
    fn pdf(&self, x: f64) -> f64;
    /// Inverse of the normalised distribution function, `u` in `(0, 1)`.
    fn quantile(&self, u: f64) -> f64;
    /// Point with normalised upper mass `q`.
    fn isf(&self, q: f64) -> f64 {
        self.quantile(1.0 - q)
    }
    /// Support endpoints `(ell, r)`; either may be infinite.
    fn support(&self) -> (f64, f64);
    fn mass(&self) -> f64 {
        1.0
    }
    fn mean(&self) -> f64;
    /// First moment above `x`: the integral of `z` over `(x, r)`.
    fn upper_moment(&self, x: f64) -> f64;
    /// Put price `int (k - x)^+ dmu`.
    fn put(&self, k: f64) -> f64 {
        let below_mass = self.cdf(k);
        let below_moment = self.mass() * self.mean() - self.upper_moment(k);
        k * below_mass - below_moment
    }
    /// `(center, scale)` used for tangent substitution in tail integrals.
    fn scale_hint(&self) -> (f64, f64);
}

/// Identifies the built-in families that have closed-form specialisations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Uniform,
    Bachelier,
    Gbm,
    Tabulated,
}

/// A family of measures `(mu_t)` on `[t_min, 1]`, nondecreasing in convex-decreasing order.
pub trait MarginalFamily: Send + Sync + Debug {
    fn kind(&self) -> FamilyKind;
    fn t_min(&self) -> f64;
    fn t_max(&self) -> f64 {
        1.0
    }
    /// The measure `mu_t`.
    fn at(&self, t: f64) -> Arc<dyn Measure>;
    fn cdf(&self, t: f64, x: f64) -> f64;
    fn pdf(&self, t: f64, x: f64) -> f64;
    fn quantile(&self, t: f64, u: f64) -> f64 {
        self.at(t).quantile(u)
    }
    fn support(&self, t: f64) -> (f64, f64);
    fn mean(&self, t: f64) -> f64;
    /// Time derivative of the distribution function.
    fn dt_cdf(&self, t: f64, x: f64) -> f64;
    /// Time derivative of the density.
    fn dt_pdf(&self, t: f64, x: f64) -> f64;
    /// Rates `(d ell / dt, d r / dt)` of the support endpoints.
    fn support_rate(&self, _t: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
    /// Time derivative of the put price, `int_{ell}^{k} dt_cdf(t, xi) dxi`.
    fn dt_put(&self, t: f64, k: f64) -> f64 {
        let (l, _) = self.support(t);
        if k <= l {
            return 0.0;
        }
        let (c, s) = self.at(t).scale_hint();
        integrate_inf(|x| self.dt_cdf(t, x), l, k, c, s, QUAD_TOL * 1e-2).value
    }
    /// Time derivative of the mean.
    fn dt_mean(&self, t: f64) -> f64 {
        let h = 1e-5;
        let lo = (t - h).max(self.t_min());
        let hi = (t + h).min(self.t_max());
        (self.mean(hi) - self.mean(lo)) / (hi - lo)
    }
    /// Time derivative of the call price `int (x - k)^+ dmu_t`.
    fn dt_call(&self, t: f64, k: f64) -> f64 {
        self.dt_put(t, k) + self.dt_mean(t)
    }
}

/// A family evaluated at a fixed time, usable wherever a [`Measure`] is expected.
#[derive(Debug, Clone)]
pub struct FamilySlice {
    pub family: Arc<dyn MarginalFamily>,
    pub t: f64,
}

/// Family specification as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_path: Option<PathBuf>,
}

/// Default lower time for the Bachelier and geometric Brownian families.
pub const DEFAULT_DELTA: f64 = 0.05;

impl FamilySpec {
    pub fn uniform() -> Self {
        Self { family: FamilyKind::Uniform, delta: None, table_path: None }
    }
    pub fn bachelier(delta: f64) -> Self {
        Self { family: FamilyKind::Bachelier, delta: Some(delta), table_path: None }
    }
    pub fn gbm(delta: f64) -> Self {
        Self { family: FamilyKind::Gbm, delta: Some(delta), table_path: None }
    }

    /// Builds the family, reading the table from disk for tabulated specs.
    pub fn build(&self) -> Result<Arc<dyn MarginalFamily>> {
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        Ok(match self.family {
            FamilyKind::Uniform => Arc::new(UniformFamily::new()),
            FamilyKind::Bachelier => Arc::new(BachelierFamily::new(delta)?),
            FamilyKind::Gbm => Arc::new(GbmFamily::new(delta)?),
            FamilyKind::Tabulated => {
                let path = self.table_path.as_ref().ok_or_else(|| {
                    SmotError::InvalidInput("family.table_path is required for a tabulated family".into())
                })?;
                Arc::new(TabulatedFamily::from_csv_path(path)?)
            }
        })
    }
}

pub fn make_uniform_family() -> Arc<dyn MarginalFamily> {
    Arc::new(UniformFamily::new())
}

pub fn make_bachelier_family(delta: f64) -> Result<Arc<dyn MarginalFamily>> {
    Ok(Arc::new(BachelierFamily::new(delta)?))
}

pub fn make_gbm_family(delta: f64) -> Result<Arc<dyn MarginalFamily>> {
    Ok(Arc::new(GbmFamily::new(delta)?))
}

pub(crate) fn check_time(family: &dyn MarginalFamily, t: f64) -> Result<()> {
    let eps = 1e-12;
    if !(t >= family.t_min() - eps && t <= family.t_max() + eps) {
        return Err(SmotError::Domain {
            what: "time",
            value: t,
            domain: format!("[{}, {}]", family.t_min(), family.t_max()),
        });
    }
    Ok(())
}

/// Put-price check of convex-decreasing order between consecutive times.
///
/// For each adjacent pair `s < t` of `times`, puts are compared at `n_strikes`
/// strikes spanning the 0.1%..99.9% quantile range of both measures, and the
/// means are compared. Returns the first violation beyond `tol`.
pub fn check_cd_order(
    family: &dyn MarginalFamily,
    times: &[f64],
    n_strikes: usize,
    tol: f64,
) -> Result<()> {
    for w in times.windows(2) {
        let (s, t) = (w[0], w[1]);
        let ms = family.at(s);
        let mt = family.at(t);
        cd_order_pair(ms.as_ref(), mt.as_ref(), n_strikes, tol).map_err(|(k, ps, pt)| {
            SmotError::OrderViolation { s, t, k, put_s: ps, put_t: pt }
        })?;
    }
    Ok(())
}

/// Checks `mu <=_cd nu` on a strike grid; on failure returns `(k, P_mu(k), P_nu(k))`.
pub fn cd_order_pair(
    mu: &dyn Measure,
    nu: &dyn Measure,
    n_strikes: usize,
    tol: f64,
) -> std::result::Result<(), (f64, f64, f64)> {
    let lo = mu.quantile(1e-3).min(nu.quantile(1e-3));
    let hi = mu.quantile(1.0 - 1e-3).max(nu.quantile(1.0 - 1e-3));
    let n = n_strikes.max(2);
    for i in 0..n {
        let k = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let (ps, pt) = (mu.put(k), nu.put(k));
        if ps > pt + tol {
            return Err((k, ps, pt));
        }
    }
    if mu.mean() + tol < nu.mean() {
        return Err((f64::INFINITY, -mu.mean(), -nu.mean()));
    }
    Ok(())
}

/// Sup-norm distance between `dt_cdf` and a centred finite difference of `cdf`
/// over the given grid.
pub fn dt_cdf_fd_error(family: &dyn MarginalFamily, ts: &[f64], xs: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in ts {
        let lo = (t - h).max(family.t_min());
        let hi = (t + h).min(family.t_max());
        for &x in xs {
            let fd = (family.cdf(hi, x) - family.cdf(lo, x)) / (hi - lo);
            worst = worst.max((fd - family.dt_cdf(t, x)).abs());
        }
    }
    worst
}

/// Numerically inverts a continuous nondecreasing `cdf` on `[lo, hi]`.
pub(crate) fn invert_cdf<F: Fn(f64) -> f64>(cdf: F, u: f64, lo: f64, hi: f64) -> f64 {
    let g = |x: f64| cdf(x) - u;
    let (glo, ghi) = (g(lo), g(hi));
    if glo >= 0.0 {
        return lo;
    }
    if ghi <= 0.0 {
        return hi;
    }
    let mut f = g;
    roots::brent_from(&mut f, lo, hi, glo, ghi, 1e-13, roots::MAX_ITER).unwrap_or(0.5 * (lo + hi))
}

impl Measure for FamilySlice {
    fn cdf(&self, x: f64) -> f64 {
        self.family.cdf(self.t, x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.family.pdf(self.t, x)
    }
    fn quantile(&self, u: f64) -> f64 {
        self.family.quantile(self.t, u)
    }
    fn support(&self) -> (f64, f64) {
        self.family.support(self.t)
    }
    fn mean(&self) -> f64 {
        self.family.mean(self.t)
    }
    fn upper_moment(&self, x: f64) -> f64 {
        self.family.at(self.t).upper_moment(x)
    }
    fn scale_hint(&self) -> (f64, f64) {
        self.family.at(self.t).scale_hint()
    }
}
