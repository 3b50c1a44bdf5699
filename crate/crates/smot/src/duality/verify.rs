use super::continuous::DualStrategy;
use super::cost::payoff_functional;
use crate::curve::Regime;
use crate::error::Result;
use crate::simulate::{DenseTrace, JumpPath, PathEnsemble};
use rayon::prelude::*;
use serde::Serialize;

/// Hedge violation threshold at the reference step `1e-3`.
pub const DEFAULT_TOL_HEDGE: f64 = 1e-3;
/// Grid step used to lay chain paths on a time grid.
pub const DEFAULT_TRACE_DT: f64 = 1e-3;

/// Violation threshold for a simulation step `dt`, proportional to `dt`.
pub fn tol_hedge_for_step(dt: f64) -> f64 {
    DEFAULT_TOL_HEDGE * dt / 1e-3
}

/// Hedge decomposition of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathHedge {
    /// Static part `Psi*(x)`.
    pub static_part: f64,
    /// `int h*(t, x_{t-}) dx_t`.
    pub dynamic_part: f64,
    /// Pathwise reward `C(x)`.
    pub payoff: f64,
    /// `static_part + dynamic_part - payoff`.
    pub residual: f64,
}

/// Summary of a superhedge check over an ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct HedgeReport {
    pub n_paths: usize,
    pub tol: f64,
    pub min_residual: f64,
    pub mean_residual: f64,
    pub violation_fraction: f64,
    pub hedge_mean: f64,
    pub hedge_se: f64,
    pub payoff_mean: f64,
    pub payoff_se: f64,
    #[serde(skip)]
    pub paths: Vec<PathHedge>,
}

/// Integrand values of the static and dynamic parts at one point of a
/// segment moving with velocity `v`.
fn integrands(strategy: &DualStrategy, t: f64, x: f64, v: f64) -> Result<(f64, f64)> {
    let p = strategy.eval(t, x);
    let r = strategy.rates(t, x)?;
    let mut running = -p.dt_psi;
    if r.regime != Regime::Diagonal {
        running -= r.jd * p.h;
    }
    if r.regime == Regime::Martingale {
        let up = strategy.eval(t, r.tu).psi;
        running += r.intensity * (p.psi - up + strategy.cost().c(x, r.tu));
    }
    Ok((running, p.h * v))
}

/// Evaluates `Psi*(x) + int h* dx - C(x)` along a dense trace. Time
/// integrals use Simpson's rule on each grid segment, along which the path
/// moves linearly; jumps enter the stochastic integral at their left limits.
pub fn hedge_path(strategy: &DualStrategy, trace: &DenseTrace, path: &JumpPath) -> Result<PathHedge> {
    let cost = strategy.cost();
    let n = trace.times.len();
    let (t0, tn) = (trace.times[0], trace.times[n - 1]);
    let mut static_part = strategy.psi_star(tn, trace.x[n - 1]) - strategy.psi_star(t0, trace.x[0]);
    let mut dynamic_part = 0.0;
    for k in 0..n - 1 {
        let (ta, tb) = (trace.times[k], trace.times[k + 1]);
        let dt = tb - ta;
        if dt <= 0.0 {
            continue;
        }
        let (xa, xb) = (trace.x[k], trace.x_left[k + 1]);
        let v = (xb - xa) / dt;
        let a = integrands(strategy, ta, xa, v)?;
        let m = integrands(strategy, 0.5 * (ta + tb), 0.5 * (xa + xb), v)?;
        let b = integrands(strategy, tb, xb, v)?;
        static_part += dt * (a.0 + 4.0 * m.0 + b.0) / 6.0;
        dynamic_part += dt * (a.1 + 4.0 * m.1 + b.1) / 6.0;
    }
    for k in 1..n {
        let (pre, post) = (trace.x_left[k], trace.x[k]);
        if post != pre {
            dynamic_part += strategy.h_star(trace.times[k], pre) * (post - pre);
        }
    }
    let payoff = payoff_functional(path, cost);
    Ok(PathHedge { static_part, dynamic_part, payoff, residual: static_part + dynamic_part - payoff })
}

/// Runs [`hedge_path`] over an ensemble in parallel. Chain paths are laid on
/// a grid of step `trace_dt`; SDE paths use their own grid.
pub fn verify_superhedge_on_paths(
    strategy: &DualStrategy,
    ensemble: &PathEnsemble,
    tol: f64,
    trace_dt: f64,
) -> Result<HedgeReport> {
    let paths = (0..ensemble.len())
        .into_par_iter()
        .map(|i| {
            let trace = ensemble.trace(i, trace_dt)?;
            hedge_path(strategy, &trace, &ensemble.paths[i])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(paths, tol))
}

fn mean_se(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = if n > 1.0 { v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

fn summarise(paths: Vec<PathHedge>, tol: f64) -> HedgeReport {
    let n = paths.len();
    let min_residual = paths.iter().map(|p| p.residual).fold(f64::INFINITY, f64::min);
    let (mean_residual, _) = mean_se(paths.iter().map(|p| p.residual));
    let violations = paths.iter().filter(|p| p.residual < -tol).count();
    let (hedge_mean, hedge_se) = mean_se(paths.iter().map(|p| p.static_part + p.dynamic_part));
    let (payoff_mean, payoff_se) = mean_se(paths.iter().map(|p| p.payoff));
    HedgeReport {
        n_paths: n,
        tol,
        min_residual,
        mean_residual,
        violation_fraction: violations as f64 / n.max(1) as f64,
        hedge_mean,
        hedge_se,
        payoff_mean,
        payoff_se,
        paths,
    }
}
