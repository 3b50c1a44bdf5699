//! Dual side of the transport problem: the cost, the pathwise reward, the
//! one-period dual triple `(phi, psi, h)`, the continuous-time dual
//! `(h*, psi*, lambda*_0)`, the optimal value and superhedge checks on
//! simulated paths.
//!
//! Simulated paths move with drift `-jd` between jumps. The static part of
//! the dual is written for that convention:
//!
//! `Psi*(x) = psi*(1, x_1) - psi*(t_min, x_{t_min})
//!   - int (d_t psi* - jd 1{x < m} d_x psi*) dt
//!   + int nu 1{x1 < x < m} (psi* - psi*(., x + ju) + c(x, x + ju)) dt`,
//!
//! so that `Psi* + int h* dx - C` equals the sum over jumps of
//! `psi*(y) - psi*(x) + h*(x)(y - x) - c(x, y)`, which vanishes for jumps to
//! `T_u` and is nonnegative in general.

mod continuous;
mod cost;
mod one_period;
mod verify;

#[cfg(test)]
mod tests;

pub use continuous::{
    build_continuous_dual, integrability_proxy, optimal_value_quadrature, optimal_value_with, DualOptions,
    DualPoint, DualStrategy, IntegrabilityProxy, LocalRates, OptimalValue, DUAL_BAND_NODES, DUAL_TIME_NODES,
    VALUE_TIME_NODES,
};
pub use cost::{default_cost, payoff_functional, squared_cost, zero_cost, CostFunction};
pub use one_period::{build_one_period_dual, OnePeriodDual, ONE_PERIOD_BAND_NODES, ONE_PERIOD_TAIL_NODES};
pub use verify::{
    hedge_path, tol_hedge_for_step, verify_superhedge_on_paths, HedgeReport, PathHedge, DEFAULT_TOL_HEDGE,
    DEFAULT_TRACE_DT,
};

/// Second-order slopes of the data `(x_i, y_i)` for a Hermite interpolant:
/// weighted centred differences inside, three-point one-sided at the ends.
pub(crate) fn fd_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (h[i] * del[i - 1] + h[i - 1] * del[i]) / (h[i - 1] + h[i]);
    }
    d[0] = ((2.0 * h[0] + h[1]) * del[0] - h[0] * del[1]) / (h[0] + h[1]);
    d[n - 1] = ((2.0 * h[n - 2] + h[n - 3]) * del[n - 2] - h[n - 2] * del[n - 3]) / (h[n - 2] + h[n - 3]);
    d
}
