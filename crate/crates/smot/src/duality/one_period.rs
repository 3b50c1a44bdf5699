use super::cost::CostFunction;
use super::fd_slopes;
use crate::coupling1p::{match_lower_mass, Branches, DecreasingCoupling, TransitionKernel};
use crate::error::{Result, SmotError};
use crate::marginals::Measure;
use crate::numerics::interp::Hermite;
use crate::numerics::quad::{gauss_legendre5_unit, integrate, integrate_inf};

/// Chebyshev-Lobatto nodes on the band of the one-period dual.
pub const ONE_PERIOD_BAND_NODES: usize = 160;
/// Nodes of the quantile-map part of `psi`.
pub const ONE_PERIOD_TAIL_NODES: usize = 200;
const QUAD_TOL: f64 = 1e-12;

/// Dual triple `(phi, psi, h)` of a decreasing one-period coupling.
#[derive(Debug, Clone)]
pub struct OnePeriodDual {
    coupling: DecreasingCoupling,
    cost: CostFunction,
    x1: f64,
    m_upper: f64,
    h_band: Option<Hermite>,
    h_cont: Option<Hermite>,
    psi: Hermite,
}

/// Builds `h` by integrating its band derivative from `h(x1) = 0`, continues
/// it above `m_upper` through the inverse of `T_u`, and builds `psi` from
/// `psi'(y) = c_y(L^{-1}(y), y) - h(L^{-1}(y))`.
pub fn build_one_period_dual(coupling: &DecreasingCoupling, cost: &CostFunction) -> Result<OnePeriodDual> {
    cost.check_assumption()?;
    let mu = coupling.pair().mu.clone();
    let nu = coupling.pair().nu.clone();
    let x1 = coupling.band_start();
    let m_upper = coupling.m_upper();
    let width = m_upper - x1;
    let scale = 1.0 + x1.abs() + m_upper.abs();

    let slope = |x: f64, b: &Branches| {
        if b.t_u - b.t_d > 1e-9 * scale {
            (cost.cx(x, b.t_u) - cost.cx(x, b.t_d)) / (b.t_u - b.t_d)
        } else {
            cost.cxy(x, x)
        }
    };

    let mut h_band = None;
    let mut h_cont = None;
    let mut band_pts: Vec<(f64, Branches, f64)> = Vec::new();
    if width > 0.0 {
        let n = ONE_PERIOD_BAND_NODES;
        let nodes: Vec<f64> = (0..=n)
            .map(|i| x1 + width * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n as f64).cos()))
            .collect();
        let mut hint = f64::NAN;
        let mut branches = vec![Branches::stay(m_upper); n + 1];
        for i in (0..n).rev() {
            let x = if i == 0 { x1 + 1e-12 * scale } else { nodes[i] };
            branches[i] = coupling.branches_near(x, &mut hint);
        }
        let slopes: Vec<f64> = (0..=n).map(|i| slope(nodes[i], &branches[i])).collect();
        let mut h = vec![0.0; n + 1];
        let (gl_x, gl_w) = gauss_legendre5_unit();
        let mut hint = f64::NAN;
        for i in (0..n).rev() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let mut sum = 0.0;
            for j in (0..5).rev() {
                let x = a + (b - a) * gl_x[j];
                let br = coupling.branches_near(x, &mut hint);
                sum += gl_w[j] * slope(x, &br);
            }
            h[i + 1] = sum * (b - a);
        }
        for i in 1..=n {
            h[i] += h[i - 1];
        }
        h_band = Some(Hermite::new(nodes.clone(), h.clone(), slopes));

        let mut ys = vec![m_upper];
        let mut hs = vec![h[n]];
        for i in (0..n).rev() {
            let y = branches[i].t_u;
            if y > *ys.last().unwrap() + 1e-12 * scale && y.is_finite() {
                ys.push(y);
                hs.push(h[i] - cost.cy(nodes[i], y));
            }
        }
        if ys.len() >= 2 {
            let d = fd_slopes(&ys, &hs);
            h_cont = Some(Hermite::new(ys, hs, d));
        }
        band_pts = (0..=n).map(|i| (nodes[i], branches[i], h[i])).collect();
    }

    // psi on the image of the quantile map and of T_d over the band.
    let (lmu, _) = mu.support();
    let p1 = mu.cdf(x1).clamp(0.0, 1.0);
    let p_lo = if lmu.is_finite() { 0.0 } else { 1e-12 };
    let mut lower_y = Vec::new();
    let mut lower_d = Vec::new();
    if p1 > p_lo {
        let n = ONE_PERIOD_TAIL_NODES;
        for i in 0..=n {
            let p = p_lo + (p1 - p_lo) * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n as f64).cos());
            let x = if i == n { x1 } else if p <= 0.0 { lmu } else { mu.quantile(p) };
            let y = match_lower_mass(mu.as_ref(), nu.as_ref(), x);
            if lower_y.last().map_or(true, |&last: &f64| y > last + 1e-13 * scale) {
                lower_y.push(y);
                lower_d.push(cost.cy(x, y));
            }
        }
    }
    let split = lower_y.len();
    for (i, (a, br, h)) in band_pts.iter().enumerate() {
        let y = if i + 1 == band_pts.len() { m_upper } else { br.t_d };
        if lower_y.last().map_or(true, |&last| y > last + 1e-13 * scale) {
            lower_y.push(y);
            lower_d.push(cost.cy(*a, y) - h);
        }
    }
    if lower_y.len() < 2 {
        return Err(SmotError::Inversion { context: "one-period dual: T_d image has fewer than two nodes".into() });
    }
    let mut lower_v = vec![0.0; lower_y.len()];
    for (lo, hi) in [(0, split), (split.saturating_sub(1), lower_y.len())] {
        if hi < lo + 2 {
            continue;
        }
        let xs = &lower_y[lo..hi];
        let ds = &lower_d[lo..hi];
        let dd = fd_slopes(xs, ds);
        let deriv = Hermite::new(xs.to_vec(), ds.to_vec(), dd);
        let cum = deriv.cumulative();
        for k in 1..xs.len() {
            lower_v[lo + k] = lower_v[lo] + cum[k];
        }
    }

    let psi_at_lower = Hermite::new(lower_y.clone(), lower_v.clone(), lower_d.clone());
    let mut ys = lower_y;
    let mut vs = lower_v;
    let mut ds = lower_d;
    for (a, br, h) in band_pts.iter().rev().skip(1) {
        let y = br.t_u;
        if !(y.is_finite() && y > *ys.last().unwrap() + 1e-12 * scale) {
            continue;
        }
        let base = psi_at_lower.eval(br.t_d);
        ys.push(y);
        vs.push(base + cost.c(*a, y) - cost.c(*a, br.t_d) - h * (y - br.t_d));
        ds.push(cost.cy(*a, y) - h);
    }
    if !ys.windows(2).all(|w| w[1] > w[0]) {
        return Err(SmotError::Inversion { context: "one-period dual: psi nodes are not increasing".into() });
    }
    Ok(OnePeriodDual {
        coupling: coupling.clone(),
        cost: cost.clone(),
        x1,
        m_upper,
        h_band,
        h_cont,
        psi: Hermite::new(ys, vs, ds),
    })
}

impl OnePeriodDual {
    pub fn coupling(&self) -> &DecreasingCoupling {
        &self.coupling
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn m_upper(&self) -> f64 {
        self.m_upper
    }

    /// Dynamic position `h(x)`.
    pub fn h(&self, x: f64) -> f64 {
        if x <= self.x1 {
            return 0.0;
        }
        if x < self.m_upper {
            return self.h_band.as_ref().map_or(0.0, |h| h.eval(x));
        }
        match (&self.h_cont, &self.h_band) {
            (Some(c), _) => c.eval(x),
            (None, Some(b)) => b.values()[b.values().len() - 1],
            _ => 0.0,
        }
    }

    pub fn psi(&self, y: f64) -> f64 {
        self.psi.eval(y)
    }

    /// `phi(x) = E[c(X, Y) - psi(Y) | X = x]`.
    pub fn phi(&self, x: f64) -> f64 {
        let b = self.coupling.branches(x);
        self.conditional(x, &b, |y| self.cost.c(x, y) - self.psi(y))
    }

    fn conditional(&self, x: f64, b: &Branches, f: impl Fn(f64) -> f64) -> f64 {
        if x <= self.x1 {
            f(b.t_d)
        } else if b.q > 0.0 {
            b.q * f(b.t_u) + (1.0 - b.q) * f(b.t_d)
        } else {
            f(b.t_d)
        }
    }

    /// `phi(x) + psi(y) + h(x)(y - x) - c(x, y)`, nonnegative for a superhedge.
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        self.phi(x) + self.psi(y) + self.h(x) * (y - x) - self.cost.c(x, y)
    }

    fn mu_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mu = self.coupling.pair().mu.as_ref();
        let (l, r) = mu.support();
        let (center, scale) = mu.scale_hint();
        let g = |x: f64| {
            let p = mu.pdf(x);
            if p > 0.0 {
                p * f(x)
            } else {
                0.0
            }
        };
        let mut cuts = vec![l];
        for c in [self.x1, self.m_upper] {
            if c > *cuts.last().unwrap() && c < r {
                cuts.push(c);
            }
        }
        cuts.push(r);
        cuts.windows(2).map(|w| integrate_inf(g, w[0], w[1], center, scale, QUAD_TOL).value).sum()
    }

    /// `E[c(X, Y)]` under the coupling, by quadrature over the kernel.
    pub fn expected_cost(&self) -> f64 {
        self.mu_integral(|x| {
            let b = self.coupling.branches(x);
            self.conditional(x, &b, |y| self.cost.c(x, y))
        })
    }

    /// `(mu(phi), nu(psi))`.
    pub fn dual_value(&self) -> (f64, f64) {
        let mu_phi = self.mu_integral(|x| self.phi(x));
        let nu = self.coupling.pair().nu.as_ref();
        (mu_phi, integrate_against(nu, |y| self.psi(y), self.psi.knots()))
    }
}

/// `int f dnu`, split at the knots of the interpolant `f` is built on.
fn integrate_against(nu: &dyn Measure, f: impl Fn(f64) -> f64, knots: &[f64]) -> f64 {
    let (l, r) = nu.support();
    let (center, scale) = nu.scale_hint();
    let g = |y: f64| {
        let p = nu.pdf(y);
        if p > 0.0 {
            p * f(y)
        } else {
            0.0
        }
    };
    let inner: Vec<f64> = knots.iter().copied().filter(|&k| k > l && k < r).collect();
    let mut total = 0.0;
    if let (Some(&first), Some(&last)) = (inner.first(), inner.last()) {
        total += integrate_inf(g, l, first, center, scale, QUAD_TOL).value;
        for w in inner.windows(2) {
            total += integrate(g, w[0], w[1], QUAD_TOL).value;
        }
        total += integrate_inf(g, last, r, center, scale, QUAD_TOL).value;
    } else {
        total = integrate_inf(g, l, r, center, scale, QUAD_TOL).value;
    }
    total
}
