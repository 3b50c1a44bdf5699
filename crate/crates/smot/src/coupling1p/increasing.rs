use super::{Branches, TransitionKernel};
use crate::error::{Result, SmotError};

/// Increasing supermartingale coupling of the uniform slices
/// `mu_t = U[-e^{2t}, e^t]` and `mu_{t+eps}`, in closed form.
///
/// Below `x1` the kernel is the left-curtain martingale coupling onto
/// `(y1, r_{t+eps})`; from `x1` to `r_t` mass moves by the antitone map onto
/// `(ell_{t+eps}, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncreasingUniformCoupling {
    pub t: f64,
    pub eps: f64,
    x1: f64,
    y1: f64,
}

impl IncreasingUniformCoupling {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !(t >= 0.0 && eps > 0.0 && t + eps <= 1.0 + 1e-12) {
            return Err(SmotError::Domain {
                what: "(t, eps)",
                value: t + eps,
                domain: "0 <= t < t + eps <= 1".into(),
            });
        }
        Ok(Self { t, eps, x1: Self::x1_formula(t, eps), y1: Self::x1_formula(t, eps) - (t + eps).exp() - (2.0 * t).exp() })
    }

    /// Closed-form phase-transition point of the increasing coupling.
    pub fn x1_formula(t: f64, eps: f64) -> f64 {
        let et = t.exp();
        let ee = eps.exp();
        let num = (3.0 * t).exp() * (1.0 - ee * ee) + et * (2.0 * ee + et * (1.0 + ee));
        let den = 1.0 + ee + et * (1.0 + ee * ee);
        num / den
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    /// Support `(ell, r)` of the source slice.
    pub fn source_support(&self) -> (f64, f64) {
        let e = self.t.exp();
        (-e * e, e)
    }

    fn width(s: f64) -> f64 {
        let e = s.exp();
        e + e * e
    }

    /// Upward destination on the martingale region `(ell_t, x1)`.
    pub fn t_u(&self, x: f64) -> f64 {
        let (t, eps) = (self.t, self.eps);
        let e2 = (2.0 * t).exp();
        0.5 * (eps.exp() * (1.0 + (t + eps).exp()) * (x + e2) / (1.0 + t.exp()) + x - e2)
    }

    /// Downward destination: `x - e^{2t} - T_u(x)` below `x1`, the antitone
    /// map `F^{-1}(t + eps, 1 - F(t, x))` from `x1` on.
    pub fn t_d(&self, x: f64) -> f64 {
        let (t, eps) = (self.t, self.eps);
        let e2 = (2.0 * t).exp();
        if x < self.x1 {
            x - e2 - self.t_u(x)
        } else {
            let f = ((x + e2) / Self::width(t)).clamp(0.0, 1.0);
            -(2.0 * (t + eps)).exp() + (1.0 - f) * Self::width(t + eps)
        }
    }
}

impl TransitionKernel for IncreasingUniformCoupling {
    fn x1(&self) -> f64 {
        self.x1
    }

    fn branches(&self, x: f64) -> Branches {
        if x >= self.x1 {
            let t_d = self.t_d(x);
            return Branches { t_d, t_u: t_d, q: 0.0 };
        }
        let t_u = self.t_u(x);
        let t_d = self.t_d(x);
        let q = if t_u > t_d { ((x - t_d) / (t_u - t_d)).clamp(0.0, 1.0) } else { 0.0 };
        Branches { t_d, t_u, q }
    }
}
