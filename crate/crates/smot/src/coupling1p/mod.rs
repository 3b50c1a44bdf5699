//! One-period supermartingale couplings between two measures `mu <=_cd nu`.
//!
//! The decreasing coupling splits the line at the phase-transition point
//! `x1`: mass below `x1` moves by the quantile map `T_d`, mass in the band
//! `(x1, m_upper)` is split between an upward destination `T_u` and a
//! downward destination `T_d` with probabilities `q` and `1 - q` so that the
//! conditional mean is `x`, and mass above `m_upper` stays put.

mod decreasing;
mod increasing;

pub use decreasing::{compute_phase_point, DecreasingCoupling, PhasePoint};
pub use increasing::IncreasingUniformCoupling;

use crate::error::{Result, SmotError};
use crate::marginals::{cd_order_pair, check_time, MarginalFamily, Measure};
use crate::numerics::roots::bisect;
use std::sync::Arc;

/// Number of grid points used to locate the density crossings.
pub const DISPERSION_GRID: usize = 2001;

/// Destinations and upward probability of the two-point kernel at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branches {
    pub t_d: f64,
    pub t_u: f64,
    pub q: f64,
}

impl Branches {
    pub fn stay(x: f64) -> Self {
        Self { t_d: x, t_u: x, q: 0.0 }
    }

    /// Destination selected by the uniform variate `u`.
    #[inline]
    pub fn select(&self, u: f64) -> f64 {
        if u < self.q {
            self.t_u
        } else {
            self.t_d
        }
    }
}

/// A transition kernel given by at most two destinations per starting point.
pub trait TransitionKernel: Send + Sync {
    /// Phase-transition point separating the two regimes.
    fn x1(&self) -> f64;
    fn branches(&self, x: f64) -> Branches;
    /// Same as [`TransitionKernel::branches`], using and updating a warm-start
    /// hint for callers that visit nearby points in sequence.
    fn branches_near(&self, x: f64, _hint: &mut f64) -> Branches {
        self.branches(x)
    }
    /// `T_u(x)` if `u < q(x)`, else `T_d(x)`.
    fn kernel_sample(&self, x: f64, u: f64) -> f64 {
        self.branches(x).select(u)
    }
}

/// Two measures in convex-decreasing order together with the end points of
/// the interval on which `f_mu > f_nu`.
#[derive(Debug, Clone)]
pub struct MeasurePair {
    pub mu: Arc<dyn Measure>,
    pub nu: Arc<dyn Measure>,
    pub m_lower: f64,
    pub m_upper: f64,
    /// Sign changes of `f_mu - f_nu` seen on the scan grid.
    pub sign_changes: usize,
}

impl MeasurePair {
    /// Checks the order on 50 strikes and locates the density crossings.
    pub fn new(mu: Arc<dyn Measure>, nu: Arc<dyn Measure>) -> Result<Self> {
        if let Err((k, ps, pt)) = cd_order_pair(mu.as_ref(), nu.as_ref(), 50, 1e-9) {
            return Err(SmotError::InvalidInput(format!(
                "measures are not in convex-decreasing order at k={k} (put {ps} > {pt})"
            )));
        }
        Ok(Self::new_unchecked(mu, nu))
    }

    /// The pair `(mu_t, mu_{t+eps})` of a family.
    pub fn from_family(family: &dyn MarginalFamily, t: f64, eps: f64) -> Result<Self> {
        check_time(family, t)?;
        check_time(family, t + eps)?;
        if !(eps > 0.0) {
            return Err(SmotError::Domain { what: "eps", value: eps, domain: "(0, 1]".into() });
        }
        let mu = family.at(t);
        let nu = family.at(t + eps);
        if let Err((k, put_s, put_t)) = cd_order_pair(mu.as_ref(), nu.as_ref(), 50, 1e-9) {
            return Err(SmotError::OrderViolation { s: t, t: t + eps, k, put_s, put_t });
        }
        Ok(Self::new_unchecked(mu, nu))
    }

    pub fn new_unchecked(mu: Arc<dyn Measure>, nu: Arc<dyn Measure>) -> Self {
        let (m_lower, m_upper, sign_changes) = density_crossings(mu.as_ref(), nu.as_ref());
        Self { mu, nu, m_lower, m_upper, sign_changes }
    }

    /// `true` when `f_mu - f_nu` is positive on a single interval.
    pub fn dispersion_holds(&self) -> bool {
        self.sign_changes <= 2 && self.m_lower < self.m_upper
    }

    /// Advisory check at 100 points; returns a description of the first
    /// point where the sign pattern of `f_mu - f_nu` is wrong.
    pub fn dispersion_warning(&self) -> Option<String> {
        if !self.dispersion_holds() {
            return Some(format!(
                "f_mu - f_nu changes sign {} times; expected a single positive interval",
                self.sign_changes
            ));
        }
        let (lo, hi) = scan_range(self.mu.as_ref(), self.nu.as_ref());
        for i in 1..100 {
            let x = lo + (hi - lo) * i as f64 / 100.0;
            let d = self.mu.pdf(x) - self.nu.pdf(x);
            let inside = x > self.m_lower && x < self.m_upper;
            let near = (x - self.m_lower).abs().min((x - self.m_upper).abs()) < 1e-9 * (hi - lo);
            if !near && ((inside && d <= 0.0) || (!inside && d > 0.0 && self.nu.pdf(x) > 0.0)) {
                return Some(format!("density comparison fails at x={x} (f_mu - f_nu = {d})"));
            }
        }
        None
    }
}

fn scan_range(mu: &dyn Measure, nu: &dyn Measure) -> (f64, f64) {
    let (lm, rm) = mu.support();
    let (ln, rn) = nu.support();
    let lo = if lm.is_finite() && ln.is_finite() { lm.min(ln) } else { mu.quantile(1e-10).min(nu.quantile(1e-10)) };
    let hi = if rm.is_finite() && rn.is_finite() {
        rm.max(rn)
    } else {
        mu.quantile(1.0 - 1e-10).max(nu.quantile(1.0 - 1e-10))
    };
    (lo, hi)
}

/// Locates the outermost crossings of `f_mu - f_nu` bounding the region where
/// it is positive. Returns `(m_lower, m_upper, sign_changes)`.
fn density_crossings(mu: &dyn Measure, nu: &dyn Measure) -> (f64, f64, usize) {
    let (lo, hi) = scan_range(mu, nu);
    let n = DISPERSION_GRID;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let d = |x: f64| mu.pdf(x) - nu.pdf(x);
    let ds: Vec<f64> = xs.iter().map(|&x| d(x)).collect();
    let mut changes = 0;
    let mut last = 0.0f64;
    for &v in &ds {
        if v != 0.0 {
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
    }
    let first = ds.iter().position(|&v| v > 0.0);
    let last_pos = ds.iter().rposition(|&v| v > 0.0);
    let (lmu, rmu) = mu.support();
    let (Some(i0), Some(i1)) = (first, last_pos) else {
        return (lmu, lmu, changes);
    };
    let positive = |x: f64| if d(x) > 0.0 { 1.0 } else { -1.0 };
    let m_lower = if i0 == 0 {
        xs[0]
    } else {
        bisect(|x| positive(x), xs[i0 - 1], xs[i0], 1e-14 * (1.0 + xs[i0].abs())).unwrap_or(xs[i0])
    };
    let m_upper = if i1 == n - 1 {
        xs[n - 1]
    } else {
        bisect(|x| -positive(x), xs[i1], xs[i1 + 1], 1e-14 * (1.0 + xs[i1].abs())).unwrap_or(xs[i1])
    };
    (m_lower.max(lmu), m_upper.min(rmu), changes)
}

/// `F_nu^{-1}(F_mu(x))`.
pub fn quantile_map(mu: &dyn Measure, nu: &dyn Measure, x: f64) -> Result<f64> {
    check_support(mu, x)?;
    Ok(match_lower_mass(mu, nu, x))
}

/// `F_nu^{-1}(nu(R) - F_mu(x))`, the antitone rearrangement.
pub fn antitone_map(mu: &dyn Measure, nu: &dyn Measure, x: f64) -> Result<f64> {
    if (mu.mass() - nu.mass()).abs() > 1e-12 * mu.mass().max(nu.mass()) {
        return Err(SmotError::InvalidInput(format!(
            "antitone map needs equal masses, got {} and {}",
            mu.mass(),
            nu.mass()
        )));
    }
    check_support(mu, x)?;
    let p = mu.cdf(x) / mu.mass();
    Ok(if p < 0.5 { nu.isf(p) } else { nu.quantile(1.0 - p) })
}

fn check_support(mu: &dyn Measure, x: f64) -> Result<()> {
    let (l, r) = mu.support();
    if !(x >= l && x <= r) || !x.is_finite() {
        return Err(SmotError::Domain { what: "x", value: x, domain: format!("[{l}, {r}]") });
    }
    Ok(())
}

/// Point `y` with `F_nu(y) = F_mu(x)` (equivalently equal upper masses),
/// evaluated on the more accurate tail.
pub(crate) fn match_lower_mass(mu: &dyn Measure, nu: &dyn Measure, x: f64) -> f64 {
    let p = mu.cdf(x);
    if p <= 0.5 {
        nu.quantile(p)
    } else {
        nu.isf(mu.sf(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::{make_bachelier_family, NormalMeasure, UniformMeasure};

    fn uniform_pair() -> MeasurePair {
        MeasurePair::new(Arc::new(UniformMeasure::new(-1.0, 1.0)), Arc::new(UniformMeasure::new(-4.0, 2.0)))
            .unwrap()
    }

    #[test]
    fn quantile_map_examples() {
        let p = uniform_pair();
        assert!((quantile_map(p.mu.as_ref(), p.nu.as_ref(), 0.0).unwrap() + 1.0).abs() < 1e-15);
        let m = UniformMeasure::new(-1.0, 1.0);
        for &x in &[-0.9, 0.0, 0.3] {
            assert!((quantile_map(&m, &m, x).unwrap() - x).abs() < 1e-15);
        }
        assert!(quantile_map(&m, &m, 1.5).is_err());
        let fam = make_bachelier_family(0.05).unwrap();
        let y = quantile_map(fam.at(0.25).as_ref(), fam.at(0.5).as_ref(), -0.25).unwrap();
        assert!((y + 0.5).abs() < 1e-12);
    }

    #[test]
    fn antitone_map_examples() {
        let m = UniformMeasure::new(-1.0, 1.0);
        for &x in &[-0.7, 0.0, 0.4] {
            assert!((antitone_map(&m, &m, x).unwrap() + x).abs() < 1e-15);
        }
        let a = NormalMeasure::new(0.0, 1.0);
        let b = NormalMeasure::new(-1.0, 2.0);
        let x10 = a.quantile(0.1);
        assert!((antitone_map(&a, &b, x10).unwrap() - b.quantile(0.9)).abs() < 1e-10);
    }

    #[test]
    fn uniform_crossings_are_support_edges() {
        let p = uniform_pair();
        assert!((p.m_lower + 1.0).abs() < 1e-12);
        assert!((p.m_upper - 1.0).abs() < 1e-12);
        assert!(p.dispersion_warning().is_none());
    }

    #[test]
    fn normal_crossings_are_symmetric_and_checked() {
        let p = MeasurePair::new(Arc::new(NormalMeasure::new(0.0, 1.0)), Arc::new(NormalMeasure::new(0.0, 2.0)))
            .unwrap();
        let c = (8.0 * 2f64.ln() / 3.0).sqrt();
        assert!((p.m_upper - c).abs() < 1e-10 && (p.m_lower + c).abs() < 1e-10);
        assert!(p.dispersion_holds());
        assert!(p.dispersion_warning().is_none());
    }

    #[test]
    fn pair_rejects_wrong_order() {
        let err = MeasurePair::new(Arc::new(UniformMeasure::new(-4.0, 2.0)), Arc::new(UniformMeasure::new(-1.0, 1.0)));
        assert!(err.is_err());
    }
}
