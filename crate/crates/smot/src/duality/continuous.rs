use super::cost::CostFunction;
use crate::curve::{ContCharacteristics, Regime};
use crate::error::{Result, SmotError};
use crate::numerics::interp::Quintic;
use crate::numerics::quad::{gauss_legendre5_unit, integrate};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Time slices of the continuous dual on `[t_min, 1]`.
pub const DUAL_TIME_NODES: usize = 201;
/// Chebyshev-Lobatto nodes per slice on the band `[x1(t), m_t]`.
pub const DUAL_BAND_NODES: usize = 192;
/// Composite Simpson intervals in `t` for the optimal value.
pub const VALUE_TIME_NODES: usize = 128;

/// Build options of [`DualStrategy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    pub time_nodes: usize,
    pub band_nodes: usize,
    /// Value of `psi*(t, x)` for `x <= x1(t)`.
    pub pin: f64,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self { time_nodes: DUAL_TIME_NODES, band_nodes: DUAL_BAND_NODES, pin: 0.0 }
    }
}

/// `psi*` at one time in the coordinate `z = (x - x1) / (m - x1)`, without the pin.
#[derive(Debug, Clone)]
struct DualSlice {
    psi: Option<Quintic>,
}

impl DualSlice {
    #[inline]
    fn eval(&self, z: f64) -> (f64, f64) {
        match &self.psi {
            Some(p) if z > 0.0 => p.eval_with_deriv(z),
            _ => (0.0, 0.0),
        }
    }
}

/// `psi*`, its time derivative and `h* = -d psi* / dx` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    pub psi: f64,
    pub dt_psi: f64,
    pub h: f64,
}

/// Local characteristics of the jump process used by the dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalRates {
    pub regime: Regime,
    pub jd: f64,
    pub intensity: f64,
    pub tu: f64,
}

/// Continuous-time dual strategy `(h*, psi*, lambda*_0)`.
///
/// Each slice stores `psi*` as a quintic Hermite interpolant in the band
/// coordinate `z`, with slopes `-h* (m - x1)` and curvatures
/// `-dh*/dx (m - x1)^2`; between slices `psi*` is a
/// cubic Hermite interpolant in `t` at fixed `z` whose time slopes are
/// centred differences across slices. `h*` and `d psi*/dt` are the exact
/// derivatives of this interpolant, so `h* = 0` at and below `x1(t)` for
/// every `t`.
#[derive(Debug, Clone)]
pub struct DualStrategy {
    chars: Arc<ContCharacteristics>,
    cost: CostFunction,
    options: DualOptions,
    times: Vec<f64>,
    step: f64,
    slices: Vec<DualSlice>,
}

/// Builds the dual with default options.
pub fn build_continuous_dual(chars: Arc<ContCharacteristics>, cost: &CostFunction) -> Result<DualStrategy> {
    DualStrategy::build(chars, cost, DualOptions::default())
}

impl DualStrategy {
    pub fn build(chars: Arc<ContCharacteristics>, cost: &CostFunction, options: DualOptions) -> Result<Self> {
        cost.check_assumption()?;
        if options.time_nodes < 4 || options.band_nodes < 4 {
            return Err(SmotError::InvalidInput(format!(
                "dual needs at least 4 time and band nodes, got {} and {}",
                options.time_nodes, options.band_nodes
            )));
        }
        let fam = chars.family();
        let (t0, t1) = (fam.t_min(), fam.t_max());
        let n = options.time_nodes;
        let step = (t1 - t0) / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|i| if i + 1 == n { t1 } else { t0 + step * i as f64 }).collect();
        let slices = times
            .par_iter()
            .map(|&t| build_slice(&chars, cost, t, options.band_nodes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { chars, cost: cost.clone(), options, times, step, slices })
    }

    /// The same strategy with `psi*` shifted to the value `pin` below `x1`.
    pub fn with_pin(&self, pin: f64) -> Self {
        let mut s = self.clone();
        s.options.pin = pin;
        s
    }

    pub fn chars(&self) -> &Arc<ContCharacteristics> {
        &self.chars
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn options(&self) -> DualOptions {
        self.options
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn x1(&self, t: f64) -> f64 {
        self.chars.x1(t)
    }

    pub fn m(&self, t: f64) -> f64 {
        self.chars.m(t)
    }

    /// `psi*`, `d psi*/dt` and `h*` at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> DualPoint {
        let x1 = self.chars.x1(t);
        let w = self.chars.m(t) - x1;
        if !(w > 0.0) || x <= x1 {
            return DualPoint { psi: self.options.pin, dt_psi: 0.0, h: 0.0 };
        }
        let z = (x - x1) / w;
        let n = self.times.len();
        let j = (((t - self.times[0]) / self.step).floor().max(0.0) as usize).min(n - 2);
        let s = ((t - self.times[j]) / self.step).clamp(0.0, 1.0);
        let lo = j.saturating_sub(1);
        let hi = (j + 2).min(n - 1);
        let mut p = [(0.0, 0.0); 4];
        for (k, idx) in (lo..=hi).enumerate() {
            p[k] = self.slices[idx].eval(z);
        }
        let at = |idx: usize| p[idx - lo];
        // Time slopes (per unit of s) at slices j and j + 1.
        let slope = |idx: usize, part: fn((f64, f64)) -> f64| -> f64 {
            if idx == 0 {
                part(at(1)) - part(at(0))
            } else if idx == n - 1 {
                part(at(n - 1)) - part(at(n - 2))
            } else {
                0.5 * (part(at(idx + 1)) - part(at(idx - 1)))
            }
        };
        let val = |q: (f64, f64)| q.0;
        let der = |q: (f64, f64)| q.1;
        let s2 = s * s;
        let s3 = s2 * s;
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, 6.0 * s - 6.0 * s2, 3.0 * s2 - 2.0 * s);
        let combine = |part: fn((f64, f64)) -> f64, b: (f64, f64, f64, f64)| {
            b.0 * part(at(j)) + b.1 * slope(j, part) + b.2 * part(at(j + 1)) + b.3 * slope(j + 1, part)
        };
        let psi = combine(val, (h00, h10, h01, h11));
        let psi_s = combine(val, (d00, d10, d01, d11));
        let psi_z = combine(der, (h00, h10, h01, h11));
        let dz_dt = -(self.chars.x1_rate(t) + z * (self.chars.m_rate(t) - self.chars.x1_rate(t))) / w;
        DualPoint { psi: self.options.pin + psi, dt_psi: psi_s / self.step + psi_z * dz_dt, h: -psi_z / w }
    }

    pub fn h_star(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x).h
    }

    pub fn psi_star(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x).psi
    }

    /// Regime, drift rate, jump intensity and jump destination at `(t, x)`.
    pub fn rates(&self, t: f64, x: f64) -> Result<LocalRates> {
        let regime = self.chars.regime(t, x);
        Ok(match regime {
            Regime::Diagonal => LocalRates { regime, jd: 0.0, intensity: 0.0, tu: x },
            Regime::Supermartingale => LocalRates { regime, jd: self.chars.jd_super(t, x), intensity: 0.0, tu: x },
            Regime::Martingale => {
                let j = self.chars.eval_jd_ju(t, x)?;
                LocalRates { regime, jd: j.jd, intensity: j.intensity, tu: j.tu }
            }
        })
    }

    /// `lambda*_0(t, x) = -d psi*/dt + 1{x < m} jd d psi*/dx
    /// + 1{band} nu (psi* - psi*(., T_u) + c(., T_u))`, the running part of
    /// the static dual written for the drift `-jd` of the jump process. With
    /// `lambda*(1, .) = psi*(1, .)` and `lambda*(t_min, .) = -psi*(t_min, .)`
    /// its integral against the marginals is the optimal value.
    pub fn lambda0(&self, t: f64, x: f64) -> Result<f64> {
        let p = self.eval(t, x);
        let r = self.rates(t, x)?;
        let mut v = -p.dt_psi;
        if r.regime != Regime::Diagonal {
            v -= r.jd * p.h;
        }
        if r.regime == Regime::Martingale {
            let up = self.eval(t, r.tu).psi;
            v += r.intensity * (p.psi - up + self.cost.c(x, r.tu));
        }
        Ok(v)
    }

    /// Integrand of the integrability proxy: `lambda*_0` with the cost term
    /// taken in absolute value separately.
    pub fn lambda_bar0(&self, t: f64, x: f64) -> Result<f64> {
        let p = self.eval(t, x);
        let r = self.rates(t, x)?;
        let mut v = -p.dt_psi;
        let mut extra = 0.0;
        if r.regime != Regime::Diagonal {
            v -= r.jd * p.h;
        }
        if r.regime == Regime::Martingale {
            let up = self.eval(t, r.tu).psi;
            v += r.intensity * (p.psi - up);
            extra = r.intensity * self.cost.c(x, r.tu).abs();
        }
        Ok(v.abs() + extra)
    }

    /// `mu(lambda*)`: the static dual value
    /// `mu_1(psi*(1)) - mu_{t_min}(psi*(t_min)) + int int lambda*_0 f dx dt`,
    /// by Simpson rules on `nt` time intervals and `nx` space intervals over
    /// the `(p, 1 - p)` quantile window.
    pub fn dual_value_quadrature(&self, nt: usize, nx: usize, p: f64) -> Result<f64> {
        let fam = self.chars.family().clone();
        let (t0, t1) = (fam.t_min(), fam.t_max());
        let nt = nt + nt % 2;
        let nx = nx + nx % 2;
        let window = |t: f64| (fam.quantile(t, p), fam.quantile(t, 1.0 - p));
        let space = |t: f64, f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            let (a, b) = window(t);
            let x1 = self.chars.x1(t);
            let m = self.chars.m(t);
            let mut cuts = vec![a];
            for c in [x1, m] {
                if c > a && c < b {
                    cuts.push(c);
                }
            }
            cuts.push(b);
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let k = (nx as f64 * (w[1] - w[0]) / (b - a)).ceil().max(2.0) as usize;
                total += simpson(w[0], w[1], k + k % 2, |x| Ok(f(x)? * fam.pdf(t, x)))?;
            }
            Ok(total)
        };
        let running = (0..=nt)
            .into_par_iter()
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / nt as f64;
                let wgt = if i == 0 || i == nt { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                Ok(wgt * space(t, &|x| self.lambda0(t, x))?)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>()
            * (t1 - t0)
            / (3.0 * nt as f64);
        let end = space(t1, &|x| Ok(self.psi_star(t1, x)))?;
        let start = space(t0, &|x| Ok(self.psi_star(t0, x)))?;
        Ok(end - start + running)
    }
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let h = (b - a) / n as f64;
    let mut s = f(a)? + f(b)?;
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64)?;
    }
    Ok(s * h / 3.0)
}

fn build_slice(chars: &ContCharacteristics, cost: &CostFunction, t: f64, n: usize) -> Result<DualSlice> {
    let x1 = chars.x1(t);
    let m = chars.m(t);
    let w = m - x1;
    if !(w > 0.0) {
        return Ok(DualSlice { psi: None });
    }
    let scale = 1.0 + x1.abs() + m.abs();
    let nodes: Vec<f64> =
        (0..=n).map(|i| x1 + w * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n as f64).cos())).collect();
    let mut tu = vec![m; n + 1];
    let mut hint = f64::NAN;
    for i in (0..n).rev() {
        let x = if i == 0 { x1 + 1e-12 * scale } else { nodes[i] };
        tu[i] = chars.solve_tu_near(t, x, &mut hint)?;
    }
    let slopes: Vec<f64> = (0..=n).map(|i| cost.cx_slope(nodes[i], tu[i])).collect();
    let (gl_x, gl_w) = gauss_legendre5_unit();
    let mut h = vec![0.0; n + 1];
    let mut hint = f64::NAN;
    for i in (0..n).rev() {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mut sum = 0.0;
        for j in (0..5).rev() {
            let x = a + (b - a) * gl_x[j];
            let y = chars.solve_tu_near(t, x, &mut hint)?;
            sum += gl_w[j] * cost.cx_slope(x, y);
        }
        h[i + 1] = sum * (b - a);
    }
    for i in 1..=n {
        h[i] += h[i - 1];
    }
    let mut psi = vec![0.0; n + 1];
    for i in 1..=n {
        let d = nodes[i] - nodes[i - 1];
        psi[i] = psi[i - 1] - d * 0.5 * (h[i - 1] + h[i]) - d * d * (slopes[i - 1] - slopes[i]) / 12.0;
    }
    let mut zs: Vec<f64> = nodes.iter().map(|&x| (x - x1) / w).collect();
    zs[0] = 0.0;
    zs[n] = 1.0;
    let mut vals = psi;
    let mut ders: Vec<f64> = h.iter().map(|&v| -v * w).collect();
    let mut curv: Vec<f64> = slopes.iter().map(|&g| -g * w * w).collect();
    let mut cont_y = vec![m];
    let mut cont_h = vec![h[n]];
    for i in (0..n).rev() {
        let y = tu[i];
        let z = (y - x1) / w;
        if !(y.is_finite() && z > zs[zs.len() - 1] + 1e-12) {
            continue;
        }
        let hy = h[i] - cost.cy(nodes[i], y);
        zs.push(z);
        vals.push(vals[i] - h[i] * (y - nodes[i]) + cost.c(nodes[i], y));
        ders.push(-hy * w);
        cont_y.push(y);
        cont_h.push(hy);
    }
    let mut curv_right = curv.clone();
    if cont_y.len() >= 3 {
        let dh = super::fd_slopes(&cont_y, &cont_h);
        curv_right[n] = -dh[0] * w * w;
        for d in dh.iter().skip(1) {
            curv.push(-d * w * w);
            curv_right.push(-d * w * w);
        }
    } else {
        for _ in 1..cont_y.len() {
            curv.push(0.0);
            curv_right.push(0.0);
        }
    }
    Ok(DualSlice { psi: Some(Quintic::new(zs, vals, ders, curv, curv_right)) })
}

/// Optimal value with quadrature diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalValue {
    pub value: f64,
    pub error_estimate: f64,
    pub warning: Option<String>,
}

/// `int int_{x1(t)}^{m_t} (jd / ju) c(x, x + ju) f(t, x) dx dt` over
/// `[t_min, 1]`: composite Simpson in `t` on [`VALUE_TIME_NODES`] intervals,
/// adaptive in `x`.
pub fn optimal_value_quadrature(chars: &ContCharacteristics, cost: &CostFunction) -> Result<OptimalValue> {
    optimal_value_with(chars, cost, VALUE_TIME_NODES)
}

pub fn optimal_value_with(chars: &ContCharacteristics, cost: &CostFunction, nt: usize) -> Result<OptimalValue> {
    let fam = chars.family().clone();
    let (t0, t1) = (fam.t_min(), fam.t_max());
    let nt = (nt + nt % 2).max(2);
    let inner: Vec<(f64, f64)> = (0..=nt)
        .into_par_iter()
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / nt as f64;
            let (x1, m) = (chars.x1(t), chars.m(t));
            if !(m > x1) {
                return Ok((0.0, 0.0));
            }
            let mut err = None;
            let q = integrate(
                |x| {
                    if x <= x1 || x >= m {
                        return 0.0;
                    }
                    match chars.eval_jd_ju(t, x) {
                        Ok(j) => j.intensity * cost.c(x, j.tu) * fam.pdf(t, x),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                },
                x1,
                m,
                1e-11,
            );
            match err {
                Some(e) => Err(e),
                None => Ok((q.value, q.error)),
            }
        })
        .collect::<Result<_>>()?;
    let h = (t1 - t0) / nt as f64;
    let simpson_on = |stride: usize| {
        let m = nt / stride;
        let mut acc = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * inner[i * stride].0;
        }
        acc * h * stride as f64 / 3.0
    };
    let value = simpson_on(1);
    let t_err = if nt % 4 == 0 { (value - simpson_on(2)).abs() / 15.0 } else { 0.0 };
    let inner_err = inner.iter().map(|p| p.1).sum::<f64>() * (t1 - t0) / (nt + 1) as f64;
    let error_estimate = t_err + inner_err;
    let warning = (error_estimate > 1e-5 * value.abs() && value != 0.0)
        .then(|| format!("quadrature error estimate {error_estimate:.3e} exceeds 1e-5 of the value {value:.6e}"));
    Ok(OptimalValue { value, error_estimate, warning })
}

/// Truncated-domain integral of `lambda_bar*` on two quantile windows.
#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityProxy {
    pub narrow: f64,
    pub wide: f64,
    pub relative_growth: f64,
    pub warning: Option<String>,
}

/// `int |psi*(t_min)| dmu_{t_min} + int sup_t |psi*(t)| dmu_1 + int int
/// lambda_bar*_0 dmu_t dt` over the `(1e-3, 1 - 1e-3)` and
/// `(1e-4, 1 - 1e-4)` quantile windows.
pub fn integrability_proxy(strategy: &DualStrategy) -> Result<IntegrabilityProxy> {
    let over = |p: f64| -> Result<f64> {
        let fam = strategy.chars.family().clone();
        let (t0, t1) = (fam.t_min(), fam.t_max());
        let nt = 64;
        let nx = 400;
        let win = |t: f64| (fam.quantile(t, p), fam.quantile(t, 1.0 - p));
        let running: f64 = (0..=nt)
            .into_par_iter()
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / nt as f64;
                let wgt = if i == 0 || i == nt { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let (a, b) = win(t);
                Ok(wgt * simpson(a, b, nx, |x| Ok(strategy.lambda_bar0(t, x)? * fam.pdf(t, x)))?)
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>()
            * (t1 - t0)
            / (3.0 * nt as f64);
        let (a0, b0) = win(t0);
        let start = simpson(a0, b0, nx, |x| Ok(strategy.psi_star(t0, x).abs() * fam.pdf(t0, x)))?;
        let (a1, b1) = win(t1);
        let end = simpson(a1, b1, nx, |x| {
            let sup = strategy.times.iter().map(|&t| strategy.psi_star(t, x).abs()).fold(0.0, f64::max);
            Ok(sup * fam.pdf(t1, x))
        })?;
        Ok(start + end + running)
    };
    let narrow = over(1e-3)?;
    let wide = over(1e-4)?;
    let relative_growth = if narrow != 0.0 { (wide - narrow) / narrow.abs() } else { 0.0 };
    let warning = (relative_growth > 0.05)
        .then(|| format!("truncated integral grows by {:.1}% when the window widens", 100.0 * relative_growth));
    Ok(IntegrabilityProxy { narrow, wide, relative_growth, warning })
}
