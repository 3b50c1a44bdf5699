//! Continuous-time characteristics of the limiting jump process.
//!
//! For each time `t` the line splits into three regimes: below the phase
//! curve `x1(t)` the process drifts down at rate `jd`; on the band
//! `(x1(t), m_t)` it drifts down and jumps up to `T_u(t, x)` with intensity
//! `jd / ju`; at or above `m_t` it stays put.

pub mod special;

use crate::error::{Result, SmotError};
use crate::marginals::{check_time, FamilyKind, MarginalFamily};
use crate::numerics::interp::Hermite;
use crate::numerics::quad::{gauss_legendre5, integrate_inf};
use crate::numerics::roots::{bisect, brent_from, golden_min, newton_bracketed, MAX_ITER, X_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Time nodes of the precomputed `x1` and `m` tables.
pub const CURVE_NODES: usize = 256;
/// Default number of space nodes in a per-time band table.
pub const SLICE_NODES: usize = 128;
/// Upper-tail mass at which the `T_u` bracket is cut for unbounded supports.
pub const TU_TAIL_MASS: f64 = 1e-10;
const SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Supermartingale,
    Martingale,
    Diagonal,
}

/// Whether the built-in families use their closed forms or the generic
/// quadrature-based solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    #[default]
    Specialised,
    Generic,
}

/// Local characteristics at one `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChars {
    pub jd: f64,
    pub ju: f64,
    pub intensity: f64,
    /// Jump destination; equals `x` when there is no jump.
    pub tu: f64,
}

/// Characteristics of the increasing uniform coupling limit: downward jumps
/// of size `jd`, upward drift at rate `ju`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncreasingChars {
    pub jd: f64,
    pub ju: f64,
}

fn scan_range(family: &dyn MarginalFamily, t: f64) -> (f64, f64) {
    let (l, r) = family.support(t);
    let lo = if l.is_finite() { l } else { family.quantile(t, 1e-10) };
    let hi = if r.is_finite() { r } else { family.quantile(t, 1.0 - 1e-10) };
    (lo, hi)
}

/// Minimiser `m_t` of `x -> dt_cdf(t, x)`, in closed form for the built-in
/// families.
pub fn solve_m_curve(family: &dyn MarginalFamily, t: f64) -> Result<f64> {
    check_time(family, t)?;
    Ok(match family.kind() {
        FamilyKind::Uniform => special::uniform_m(t),
        FamilyKind::Bachelier => special::bachelier_m(t),
        FamilyKind::Gbm => special::gbm_m(t),
        FamilyKind::Tabulated => return solve_m_generic(family, t),
    })
}

/// Grid scan followed by golden-section refinement. Fails with
/// `MultipleExtrema` when `dt_cdf(t, .)` has more than one local minimum.
pub fn solve_m_generic(family: &dyn MarginalFamily, t: f64) -> Result<f64> {
    check_time(family, t)?;
    let (lo, hi) = scan_range(family, t);
    let n = SCAN_POINTS;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| family.dt_cdf(t, x)).collect();
    let size = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-10 * size;
    let mut minima = 0;
    let mut dir = 0i8;
    for w in vals.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= tol {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if dir == -1 && s == 1 {
            minima += 1;
        }
        dir = s;
    }
    if dir == -1 {
        minima += 1;
    }
    if minima > 1 {
        return Err(SmotError::MultipleExtrema { t, count: minima });
    }
    let i = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(n - 1)];
    let m = golden_min(|x| family.dt_cdf(t, x), a, b, 1e-11 * (1.0 + xs[i].abs()));
    let (l, r) = family.support(t);
    Ok(m.clamp(l, r))
}

/// Left-hand side of the phase-curve equation,
/// `int_x^r (x - xi) dt_pdf(t, xi) dxi + (x - r) f(t, r-) r'(t)`.
/// The boundary term vanishes for unbounded or fixed right ends.
pub fn x1_residual(family: &dyn MarginalFamily, t: f64, x: f64) -> f64 {
    let (_, r) = family.support(t);
    let (c, s) = family.at(t).scale_hint();
    let integral = integrate_inf(|xi| (x - xi) * family.dt_pdf(t, xi), x, r, c, s, 1e-13).value;
    let boundary = if r.is_finite() {
        let (_, dr) = family.support_rate(t);
        (x - r) * family.pdf(t, r - 1e-12 * (1.0 + r.abs())) * dr
    } else {
        0.0
    };
    integral + boundary
}

/// Phase-transition point `x1(t)`, in closed form or by a single scalar
/// equation for the built-in families.
pub fn solve_x1_curve(family: &dyn MarginalFamily, t: f64) -> Result<f64> {
    check_time(family, t)?;
    match family.kind() {
        FamilyKind::Uniform => Ok(special::uniform_x1(t)),
        FamilyKind::Bachelier => special::bachelier_x1(t),
        FamilyKind::Gbm => special::gbm_x1(t),
        FamilyKind::Tabulated => solve_x1_generic(family, t),
    }
}

/// Root of [`x1_residual`] below `m_t`, by quadrature.
pub fn solve_x1_generic(family: &dyn MarginalFamily, t: f64) -> Result<f64> {
    let m = solve_m_generic(family, t)?;
    x1_below(family, t, m)
}

fn x1_below(family: &dyn MarginalFamily, t: f64, m: f64) -> Result<f64> {
    let (lo, _) = scan_range(family, t);
    let hi = m - 1e-7 * (m - lo);
    let mut f = |x: f64| x1_residual(family, t, x);
    let (flo, fhi) = (f(lo), f(hi));
    brent_from(&mut f, lo, hi, flo, fhi, X_TOL * 1e-2, MAX_ITER).map_err(|e| SmotError::root(format!("phase curve at t={t}"), e))
}

/// `G(t, x, y) = int_x^y (x - xi) dt_pdf(t, xi) dxi` by adaptive quadrature.
pub fn tu_residual(family: &dyn MarginalFamily, t: f64, x: f64, y: f64) -> f64 {
    let (c, s) = family.at(t).scale_hint();
    integrate_inf(|xi| (x - xi) * family.dt_pdf(t, xi), x, y, c, s, 1e-13).value
}

/// `G(t, x, y)`: Gauss-Legendre for short intervals, otherwise the identity
/// `(x - y) dt_cdf(y) + dt_put(y) - dt_put(x)`.
fn balance(family: &dyn MarginalFamily, t: f64, x: f64, y: f64, scale: f64) -> f64 {
    let w = y - x;
    if w < 0.25 * scale {
        let mid = 0.5 * (x + y);
        let g = |xi: f64| (x - xi) * family.dt_pdf(t, xi);
        gauss_legendre5(g, x, mid) + gauss_legendre5(g, mid, y)
    } else {
        (x - y) * family.dt_cdf(t, y) + family.dt_put(t, y) - family.dt_put(t, x)
    }
}

/// Continuous-time characteristics of a marginal family.
#[derive(Debug, Clone)]
pub struct ContCharacteristics {
    family: Arc<dyn MarginalFamily>,
    mode: CurveMode,
    times: Vec<f64>,
    x1_table: Hermite,
    m_table: Hermite,
}

impl ContCharacteristics {
    pub fn new(family: Arc<dyn MarginalFamily>, mode: CurveMode) -> Result<Self> {
        Self::with_nodes(family, mode, CURVE_NODES)
    }

    pub fn with_nodes(family: Arc<dyn MarginalFamily>, mode: CurveMode, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(SmotError::InvalidInput(format!("need at least 2 curve nodes, got {nodes}")));
        }
        let (a, b) = (family.t_min(), family.t_max());
        let times: Vec<f64> = (0..nodes).map(|i| a + (b - a) * i as f64 / (nodes - 1) as f64).collect();
        let solved: Vec<(f64, f64)> = times
            .par_iter()
            .map(|&t| {
                let m = Self::direct_m(family.as_ref(), mode, t)?;
                let x1 = Self::direct_x1(family.as_ref(), mode, t, m)?;
                Ok((x1, m))
            })
            .collect::<Result<_>>()?;
        let x1s = solved.iter().map(|p| p.0).collect();
        let ms = solved.iter().map(|p| p.1).collect();
        Ok(Self {
            x1_table: Hermite::monotone(times.clone(), x1s),
            m_table: Hermite::monotone(times.clone(), ms),
            family,
            mode,
            times,
        })
    }

    fn direct_m(family: &dyn MarginalFamily, mode: CurveMode, t: f64) -> Result<f64> {
        match mode {
            CurveMode::Specialised => solve_m_curve(family, t),
            CurveMode::Generic => solve_m_generic(family, t),
        }
    }

    fn direct_x1(family: &dyn MarginalFamily, mode: CurveMode, t: f64, m: f64) -> Result<f64> {
        match mode {
            CurveMode::Specialised => solve_x1_curve(family, t),
            CurveMode::Generic => x1_below(family, t, m),
        }
    }

    pub fn family(&self) -> &Arc<dyn MarginalFamily> {
        &self.family
    }

    pub fn mode(&self) -> CurveMode {
        self.mode
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `true` when the uniform closed forms are used for every characteristic.
    pub fn is_closed_uniform(&self) -> bool {
        self.mode == CurveMode::Specialised && self.family.kind() == FamilyKind::Uniform
    }

    /// `x1(t)` from the precomputed table (exact for the uniform family).
    pub fn x1(&self, t: f64) -> f64 {
        if self.is_closed_uniform() {
            special::uniform_x1(t)
        } else {
            self.x1_table.eval(t)
        }
    }

    /// `m_t`, in closed form where available, otherwise from the table.
    pub fn m(&self, t: f64) -> f64 {
        match (self.mode, self.family.kind()) {
            (CurveMode::Specialised, FamilyKind::Uniform) => special::uniform_m(t),
            (CurveMode::Specialised, FamilyKind::Bachelier) => special::bachelier_m(t),
            (CurveMode::Specialised, FamilyKind::Gbm) => special::gbm_m(t),
            _ => self.m_table.eval(t),
        }
    }

    /// Time derivative of [`ContCharacteristics::x1`].
    pub fn x1_rate(&self, t: f64) -> f64 {
        if self.is_closed_uniform() {
            let e = t.exp();
            -e / ((1.0 + 2.0 * e) * (1.0 + 2.0 * e))
        } else {
            self.x1_table.deriv(t)
        }
    }

    /// Time derivative of [`ContCharacteristics::m`].
    pub fn m_rate(&self, t: f64) -> f64 {
        let root = (t * (t + 1.0)).sqrt();
        match (self.mode, self.family.kind()) {
            (CurveMode::Specialised, FamilyKind::Uniform) => t.exp(),
            (CurveMode::Specialised, FamilyKind::Bachelier) => (2.0 * t + 1.0) / (2.0 * root),
            (CurveMode::Specialised, FamilyKind::Gbm) => root.exp() * (2.0 * t + 1.0) / (2.0 * root),
            _ => self.m_table.deriv(t),
        }
    }

    /// Direct solve of `x1(t)`, bypassing the table.
    pub fn solve_x1(&self, t: f64) -> Result<f64> {
        let m = Self::direct_m(self.family.as_ref(), self.mode, t)?;
        Self::direct_x1(self.family.as_ref(), self.mode, t, m)
    }

    pub fn solve_m(&self, t: f64) -> Result<f64> {
        Self::direct_m(self.family.as_ref(), self.mode, t)
    }

    pub fn ell(&self, t: f64) -> f64 {
        self.family.support(t).0
    }

    /// Regime of `x` at time `t`; `x = x1(t)` counts as supermartingale.
    pub fn regime(&self, t: f64, x: f64) -> Regime {
        classify(x, self.x1(t), self.m(t))
    }

    /// Jump destination `T_u(t, x)` on the martingale band.
    pub fn solve_tu(&self, t: f64, x: f64) -> Result<f64> {
        let mut hint = f64::NAN;
        self.solve_tu_near(t, x, &mut hint)
    }

    /// As [`ContCharacteristics::solve_tu`], warm-started from `hint`, which
    /// is overwritten with the result.
    pub fn solve_tu_near(&self, t: f64, x: f64, hint: &mut f64) -> Result<f64> {
        let (x1, m) = (self.x1(t), self.m(t));
        if classify(x, x1, m) != Regime::Martingale {
            return Err(SmotError::Domain { what: "x", value: x, domain: format!("martingale band ({x1}, {m})") });
        }
        let tu = self.tu_in_band(t, x, m, *hint)?;
        *hint = tu;
        Ok(tu)
    }

    fn tu_upper(&self, t: f64) -> f64 {
        let (_, r) = self.family.support(t);
        if r.is_finite() {
            r
        } else {
            self.family.quantile(t, 1.0 - TU_TAIL_MASS)
        }
    }

    fn tu_in_band(&self, t: f64, x: f64, m: f64, hint: f64) -> Result<f64> {
        if self.is_closed_uniform() {
            return Ok(t.exp());
        }
        let fam = self.family.as_ref();
        let hi = self.tu_upper(t);
        if m >= hi {
            return Ok(hi);
        }
        let scale = fam.at(t).scale_hint().1;
        let g = |y: f64| balance(fam, t, x, y, scale);
        let ga = g(m);
        if ga <= 0.0 {
            return Ok(m);
        }
        let gb = g(hi);
        if gb >= 0.0 {
            return Ok(hi);
        }
        newton_bracketed(
            |y| (g(y), (x - y) * fam.dt_pdf(t, y)),
            m,
            hi,
            ga,
            gb,
            hint,
            X_TOL * 1e-2 * (1.0 + m.abs()),
            MAX_ITER,
        )
        .map_err(|e| SmotError::root(format!("T_u at t={t}, x={x}"), e))
    }

    /// Drift rate `dt_cdf / f` on the supermartingale region.
    pub fn jd_super(&self, t: f64, x: f64) -> f64 {
        if self.mode == CurveMode::Specialised {
            match self.family.kind() {
                FamilyKind::Uniform => return special::uniform_jd_super(t, x),
                FamilyKind::Bachelier => return special::bachelier_jd_super(t, x),
                FamilyKind::Gbm => return special::gbm_jd_super(t, x),
                FamilyKind::Tabulated => {}
            }
        }
        let f = self.family.pdf(t, x);
        if f > 0.0 {
            self.family.dt_cdf(t, x) / f
        } else {
            0.0
        }
    }

    /// `(jd, ju, intensity)` at `(t, x)` for `ell(t) <= x < m_t`.
    pub fn eval_jd_ju(&self, t: f64, x: f64) -> Result<JumpChars> {
        let (x1, m) = (self.x1(t), self.m(t));
        let ell = self.ell(t);
        if !(x >= ell && x < m) {
            return Err(SmotError::Domain { what: "x", value: x, domain: format!("[{ell}, {m})") });
        }
        if x <= x1 {
            return Ok(JumpChars { jd: self.jd_super(t, x), ju: 0.0, intensity: 0.0, tu: x });
        }
        let tu = self.tu_in_band(t, x, m, f64::NAN)?;
        Ok(self.band_chars(t, x, x1, tu))
    }

    fn band_chars(&self, t: f64, x: f64, x1: f64, tu: f64) -> JumpChars {
        let ju = tu - x;
        if self.is_closed_uniform() {
            let nu = special::uniform_intensity(t);
            return JumpChars { jd: nu * ju, ju, intensity: nu, tu };
        }
        let fam = self.family.as_ref();
        let f = fam.pdf(t, x);
        let (_, r) = fam.support(t);
        let flux = if r.is_finite() && tu >= r {
            fam.dt_cdf(t, x) + (fam.dt_put(t, x) - fam.dt_put(t, x1)) / (r - x)
        } else {
            fam.dt_cdf(t, x) - fam.dt_cdf(t, tu)
        };
        let jd = if f > 0.0 { flux / f } else { 0.0 };
        let intensity = if ju > 0.0 { jd / ju } else { 0.0 };
        JumpChars { jd, ju, intensity, tu }
    }

    /// Tabulates the band characteristics at time `t` on `nodes` interior
    /// Chebyshev points.
    pub fn slice(&self, t: f64, nodes: usize) -> Result<CharSlice> {
        let (x1, m) = (self.x1(t), self.m(t));
        let ell = self.ell(t);
        if !(m > x1) || nodes < 2 {
            return Ok(CharSlice { t, x1, m, ell, band: None });
        }
        let xs: Vec<f64> = (0..nodes)
            .map(|i| {
                let c = (std::f64::consts::PI * (i as f64 + 0.5) / nodes as f64).cos();
                x1 + (m - x1) * 0.5 * (1.0 - c)
            })
            .collect();
        let mut tu = vec![0.0; nodes];
        let mut jd = vec![0.0; nodes];
        let mut nu = vec![0.0; nodes];
        let mut hint = f64::NAN;
        for i in (0..nodes).rev() {
            let y = self.tu_in_band(t, xs[i], m, hint)?;
            hint = y;
            let c = self.band_chars(t, xs[i], x1, y);
            tu[i] = y;
            jd[i] = c.jd;
            nu[i] = c.intensity;
        }
        Ok(CharSlice {
            t,
            x1,
            m,
            ell,
            band: Some(BandTable {
                tu: Hermite::monotone(xs.clone(), tu),
                jd: Hermite::monotone(xs.clone(), jd),
                nu: Hermite::monotone(xs, nu),
            }),
        })
    }
}

fn classify(x: f64, x1: f64, m: f64) -> Regime {
    if x <= x1 {
        Regime::Supermartingale
    } else if x < m {
        Regime::Martingale
    } else {
        Regime::Diagonal
    }
}

#[derive(Debug, Clone)]
struct BandTable {
    tu: Hermite,
    jd: Hermite,
    nu: Hermite,
}

/// Band characteristics tabulated at one time.
#[derive(Debug, Clone)]
pub struct CharSlice {
    pub t: f64,
    pub x1: f64,
    pub m: f64,
    pub ell: f64,
    band: Option<BandTable>,
}

impl CharSlice {
    pub fn regime(&self, x: f64) -> Regime {
        classify(x, self.x1, self.m)
    }

    pub fn has_band(&self) -> bool {
        self.band.is_some()
    }

    /// Interpolated `jd` on the band (0 if the band is empty).
    pub fn band_jd(&self, x: f64) -> f64 {
        self.band.as_ref().map_or(0.0, |b| b.jd.eval(x).max(0.0))
    }

    pub fn band_intensity(&self, x: f64) -> f64 {
        self.band.as_ref().map_or(0.0, |b| b.nu.eval(x).max(0.0))
    }

    /// Interpolated `T_u`, usable as a warm start for exact solves.
    pub fn tu_estimate(&self, x: f64) -> f64 {
        self.band.as_ref().map_or(x, |b| b.tu.eval(x))
    }

    /// Band point `x` with interpolated `T_u(x) = y`, for `y` in the range of
    /// the table.
    pub fn tu_inverse(&self, y: f64) -> Option<f64> {
        let b = self.band.as_ref()?;
        let knots = b.tu.knots();
        let (a, z) = (knots[0], knots[knots.len() - 1]);
        let (ya, yz) = (b.tu.eval(a), b.tu.eval(z));
        if !(y <= ya && y >= yz) {
            return None;
        }
        bisect(|x| b.tu.eval(x) - y, a, z, 1e-14 * (1.0 + z.abs())).ok()
    }
}

/// Increasing-coupling characteristics of the uniform family,
/// `jd = e^{2t} + x` and `ju = (1 + 2e^t)/2 (x + e^{2t})/(1 + e^t)`, the
/// limits of `x - T_d` and `(T_u - x)/eps` of the one-period coupling.
pub fn eval_increasing_chars_uniform(family: &dyn MarginalFamily, t: f64, x: f64) -> Result<IncreasingChars> {
    if family.kind() != FamilyKind::Uniform {
        return Err(SmotError::InvalidInput(format!(
            "increasing characteristics are only available for the uniform family, got {:?}",
            family.kind()
        )));
    }
    check_time(family, t)?;
    let e = t.exp();
    let e2 = e * e;
    if !(x >= -e2 && x <= e) {
        return Err(SmotError::Domain { what: "x", value: x, domain: format!("[{}, {e}]", -e2) });
    }
    Ok(IncreasingChars { jd: e2 + x, ju: 0.5 * (1.0 + 2.0 * e) * (x + e2) / (1.0 + e) })
}
