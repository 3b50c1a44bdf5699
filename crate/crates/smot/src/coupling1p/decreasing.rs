use super::{match_lower_mass, Branches, MeasurePair, TransitionKernel};
use crate::error::{Result, SmotError};
use crate::marginals::Measure;
use crate::numerics::roots::{self, bisect, newton_bracketed};

/// Upper mass below which the upward destination is treated as lying at the
/// end of an unbounded support.
pub const TU_TAIL_MASS: f64 = 1e-10;

/// Phase-transition point `x1` and the left end `y1` of its martingale image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x1: f64,
    pub y1: f64,
    /// `false` when the means agree and the whole pair is a martingale pair;
    /// then `x1` is the left end of the support of `mu`.
    pub transition: bool,
}

/// Solves the mass and mean preservation system
/// `int_{x1} z^i dmu = int_{y1} z^i dnu`, `i = 0, 1`, by a nested solve:
/// `y1(x1)` from the mass equation, then a bracketed root of the mean
/// residual on `(ell_mu, m_upper)`.
pub fn compute_phase_point(pair: &MeasurePair) -> Result<PhasePoint> {
    let mu = pair.mu.as_ref();
    let nu = pair.nu.as_ref();
    let (lmu, _) = mu.support();
    let (lnu, _) = nu.support();
    let lo = if lmu.is_finite() { lmu } else { mu.quantile(1e-12) };
    let resid = |x: f64| mu.upper_moment(x) - nu.upper_moment(match_lower_mass(mu, nu, x));
    let r_lo = resid(lo);
    let scale = 1.0 + mu.mean().abs() + mu.scale_hint().1;
    if r_lo <= 1e-13 * scale {
        return Ok(PhasePoint { x1: lmu, y1: lnu, transition: false });
    }
    // Difference of the conditional means of the matched upper parts.
    let cond = |x: f64| resid(x) / mu.sf(x);
    let hi = if mu.sf(pair.m_upper) > 1e-9 { pair.m_upper } else { mu.isf(1e-9).min(pair.m_upper) };
    let (c_lo, c_hi) = (cond(lo), cond(hi));
    if !(c_hi < 0.0) {
        return Err(SmotError::RootBracket {
            context: "phase point (mean residual does not change sign on (ell_mu, m_upper))".into(),
            a: lo,
            b: hi,
            fa: c_lo,
            fb: c_hi,
        });
    }
    let mut f = cond;
    let x1 = roots::brent_from(&mut f, lo, hi, c_lo, c_hi, roots::X_TOL * 1e-2, roots::MAX_ITER)
        .map_err(|e| SmotError::root("phase point", e))?;
    Ok(PhasePoint { x1, y1: match_lower_mass(mu, nu, x1), transition: true })
}

/// Decreasing supermartingale coupling of a pair under the dispersion
/// assumption.
#[derive(Debug, Clone)]
pub struct DecreasingCoupling {
    pair: MeasurePair,
    phase: PhasePoint,
    tu_upper: f64,
}

impl DecreasingCoupling {
    /// Computes the phase point and verifies monotonicity of the supporting
    /// maps on a 30-point grid of the band.
    pub fn build(pair: MeasurePair) -> Result<Self> {
        let phase = compute_phase_point(&pair)?;
        let coupling = Self::from_phase(pair, phase);
        coupling.verify_monotone(30)?;
        Ok(coupling)
    }

    /// Builds without the monotonicity verification.
    pub fn from_phase(pair: MeasurePair, phase: PhasePoint) -> Self {
        let (_, rnu) = pair.nu.support();
        let tu_upper = if rnu.is_finite() { rnu } else { pair.nu.isf(TU_TAIL_MASS) };
        Self { pair, phase, tu_upper }
    }

    pub fn pair(&self) -> &MeasurePair {
        &self.pair
    }
    pub fn phase(&self) -> PhasePoint {
        self.phase
    }
    pub fn y1(&self) -> f64 {
        self.phase.y1
    }
    pub fn m_upper(&self) -> f64 {
        self.pair.m_upper
    }

    /// Left end of the band used for grids: `x1`, or a far quantile of `mu`
    /// when there is no transition on an unbounded support.
    pub fn band_start(&self) -> f64 {
        if self.phase.x1.is_finite() {
            self.phase.x1
        } else {
            self.pair.mu.quantile(1e-12)
        }
    }

    /// Mass and mean residuals of the phase-point system.
    pub fn phase_residuals(&self) -> (f64, f64) {
        let (mu, nu) = (self.pair.mu.as_ref(), self.pair.nu.as_ref());
        let PhasePoint { x1, y1, .. } = self.phase;
        (mu.sf(x1) - nu.sf(y1), mu.upper_moment(x1) - nu.upper_moment(y1))
    }

    /// `g(x, y) = S_nu^{-1}(S_mu(x) - S_mu(y) + S_nu(y))`: the lower end of the
    /// `nu`-interval that balances the mass of `mu` on `[x, y]`.
    pub fn g(&self, x: f64, y: f64) -> f64 {
        let (mu, nu) = (self.pair.mu.as_ref(), self.pair.nu.as_ref());
        g_from(nu, mu.sf(x) - mu.sf(y) + nu.sf(y))
    }

    /// Mean-balance function whose root in `y` is `T_u(x)`; increasing in `y`
    /// on `(m_upper, r_nu)`.
    pub fn balance(&self, x: f64, y: f64) -> f64 {
        let (mu, nu) = (self.pair.mu.as_ref(), self.pair.nu.as_ref());
        let g = self.g(x, y);
        nu.upper_moment(g) - nu.upper_moment(y) + mu.upper_moment(y) - mu.upper_moment(x)
    }

    /// Solves for `T_u(x)` on the band starting from `hint`. Returns the
    /// upper bracket end when the root lies beyond it.
    fn solve_tu(&self, x: f64, hint: f64) -> f64 {
        let (mu, nu) = (self.pair.mu.as_ref(), self.pair.nu.as_ref());
        let sx = mu.sf(x);
        let mx = mu.upper_moment(x);
        let eval = |y: f64| {
            let sy_mu = mu.sf(y);
            let sy_nu = nu.sf(y);
            let g = g_from(nu, sx - sy_mu + sy_nu);
            let h = nu.upper_moment(g) - nu.upper_moment(y) + mu.upper_moment(y) - mx;
            (h, (y - g) * (nu.pdf(y) - mu.pdf(y)))
        };
        let a = self.pair.m_upper;
        let b = self.tu_upper;
        let (ha, _) = eval(a);
        if ha >= 0.0 {
            return a;
        }
        let (hb, _) = eval(b);
        if hb <= 0.0 {
            return b;
        }
        let tol = roots::X_TOL * 1e-2;
        match newton_bracketed(eval, a, b, ha, hb, hint, tol, roots::MAX_ITER) {
            Ok(y) => y,
            Err(_) => bisect(|y| eval(y).0, a, b, tol).unwrap_or(0.5 * (a + b)),
        }
    }

    fn band_branches(&self, x: f64, hint: f64) -> Branches {
        let t_u = self.solve_tu(x, hint);
        let t_d = self.g(x, t_u);
        let q = if t_u > t_d { ((x - t_d) / (t_u - t_d)).clamp(0.0, 1.0) } else { 0.0 };
        Branches { t_d, t_u, q }
    }

    /// Downward destination.
    pub fn t_d(&self, x: f64) -> f64 {
        self.branches(x).t_d
    }

    /// Upward destination; `+inf` on the supermartingale region.
    pub fn t_u(&self, x: f64) -> f64 {
        self.branches(x).t_u
    }

    /// Upward probability. At and above `m_upper` the one-sided limit from
    /// `m_upper - 1e-8` is returned.
    pub fn q(&self, x: f64) -> f64 {
        if x >= self.pair.m_upper {
            let z = self.pair.m_upper - 1e-8;
            return if z > self.phase.x1 { self.branches(z).q } else { 0.0 };
        }
        self.branches(x).q
    }

    /// Checks strict monotonicity of `T_u` (decreasing) and `T_d`
    /// (increasing) on `n` interior points of the band.
    pub fn verify_monotone(&self, n: usize) -> Result<()> {
        let a = self.band_start();
        let b = self.pair.m_upper;
        if !(b > a) {
            return Ok(());
        }
        let mut prev: Option<Branches> = None;
        let mut hint = f64::NAN;
        for i in 1..=n {
            let x = a + (b - a) * i as f64 / (n + 1) as f64;
            let br = self.branches_near(x, &mut hint);
            if let Some(p) = prev {
                let capped = br.t_u >= self.tu_upper || p.t_u >= self.tu_upper;
                if (!capped && br.t_u >= p.t_u) || br.t_d < p.t_d {
                    return Err(SmotError::Monotonicity { context: "decreasing coupling maps".into(), x });
                }
            }
            prev = Some(br);
        }
        Ok(())
    }

    /// `(x, T_d, T_u, q)` on `n` equally spaced points spanning the support
    /// of `mu` (the `1e-4` and `1 - 1e-4` quantiles for unbounded ends).
    pub fn dump(&self, n: usize) -> Vec<[f64; 4]> {
        let mu = self.pair.mu.as_ref();
        let (l, r) = mu.support();
        let lo = if l.is_finite() { l } else { mu.quantile(1e-4) };
        let hi = if r.is_finite() { r } else { mu.quantile(1.0 - 1e-4) };
        let n = n.max(2);
        let mut hint = f64::NAN;
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let b = self.branches_near(x, &mut hint);
                [x, b.t_d, b.t_u, b.q]
            })
            .collect()
    }
}

fn g_from(nu: &dyn Measure, upper_mass: f64) -> f64 {
    nu.isf(upper_mass.clamp(0.0, 1.0))
}

impl TransitionKernel for DecreasingCoupling {
    fn x1(&self) -> f64 {
        self.phase.x1
    }

    fn branches(&self, x: f64) -> Branches {
        let mut hint = f64::NAN;
        self.branches_near(x, &mut hint)
    }

    fn branches_near(&self, x: f64, hint: &mut f64) -> Branches {
        if x <= self.phase.x1 {
            let t_d = match_lower_mass(self.pair.mu.as_ref(), self.pair.nu.as_ref(), x);
            return Branches { t_d, t_u: f64::INFINITY, q: 0.0 };
        }
        if x >= self.pair.m_upper {
            return Branches::stay(x);
        }
        let b = self.band_branches(x, *hint);
        *hint = b.t_u;
        b
    }
}
