use crate::error::{Result, SmotError};
use crate::simulate::JumpPath;
use std::fmt;
use std::sync::Arc;

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Reward `c(x, y)` of a move from `x` to `y` with its first partial derivatives.
#[derive(Clone)]
pub struct CostFunction {
    pub name: String,
    c: Fn2,
    cx: Fn2,
    cy: Fn2,
    cxy: Option<Fn2>,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Points of the grid on which [`CostFunction::check_assumption`] runs.
const CHECK_GRID: [f64; 9] = [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0];

impl CostFunction {
    pub fn new(
        name: impl Into<String>,
        c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        cx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        cy: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), c: Arc::new(c), cx: Arc::new(cx), cy: Arc::new(cy), cxy: None }
    }

    /// Supplies the mixed derivative in closed form instead of by differencing.
    pub fn with_cxy(mut self, cxy: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cxy = Some(Arc::new(cxy));
        self
    }

    /// Looks up one of the built-in costs: `default`, `zero` or `squared`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(default_cost()),
            "zero" => Ok(zero_cost()),
            "squared" => Ok(squared_cost()),
            other => Err(SmotError::InvalidInput(format!(
                "unknown cost '{other}' (expected default, zero or squared)"
            ))),
        }
    }

    #[inline]
    pub fn c(&self, x: f64, y: f64) -> f64 {
        (self.c)(x, y)
    }

    #[inline]
    pub fn cx(&self, x: f64, y: f64) -> f64 {
        (self.cx)(x, y)
    }

    #[inline]
    pub fn cy(&self, x: f64, y: f64) -> f64 {
        (self.cy)(x, y)
    }

    /// Mixed derivative `c_xy`, by a centred difference of `c_x` when no
    /// closed form was supplied.
    pub fn cxy(&self, x: f64, y: f64) -> f64 {
        if let Some(f) = &self.cxy {
            return f(x, y);
        }
        let h = 1e-5 * (1.0 + y.abs());
        (self.cx(x, y + h) - self.cx(x, y - h)) / (2.0 * h)
    }

    /// `(x, y) -> x` limit of `(c_x(x, y) - c_x(x, x)) / (y - x)`, evaluated
    /// stably for small `y - x`.
    pub fn cx_slope(&self, x: f64, y: f64) -> f64 {
        let d = y - x;
        if d.abs() < 1e-7 * (1.0 + x.abs()) {
            self.cxy(x, x)
        } else {
            (self.cx(x, y) - self.cx(x, x)) / d
        }
    }

    /// Checks `c(x,x) = c_y(x,x) = 0`, `c_xy >= 0` and `c_xyy <= 0` on a grid,
    /// the derivatives by finite differences. The weak inequalities admit the
    /// zero cost; any cost with a strictly negative `c_xy` or positive `c_xyy`
    /// somewhere on the grid is rejected with the failing point.
    pub fn check_assumption(&self) -> Result<()> {
        let h = 1e-3;
        for &x in &CHECK_GRID {
            let (c0, cy0) = (self.c(x, x), self.cy(x, x));
            if c0.abs() > 1e-12 * (1.0 + x.abs()) || cy0.abs() > 1e-10 * (1.0 + x.abs()) {
                return Err(SmotError::CostAssumption(format!(
                    "cost '{}': c(x,x) = {c0}, c_y(x,x) = {cy0} at x = {x}",
                    self.name
                )));
            }
            for &y in &CHECK_GRID {
                let cxy = (self.c(x + h, y + h) - self.c(x + h, y - h) - self.c(x - h, y + h) + self.c(x - h, y - h))
                    / (4.0 * h * h);
                if cxy < -1e-6 {
                    return Err(SmotError::CostAssumption(format!(
                        "cost '{}': c_xy = {cxy:.6} < 0 at (x, y) = ({x}, {y})",
                        self.name
                    )));
                }
                let cxyy = (self.cx(x, y + h) - 2.0 * self.cx(x, y) + self.cx(x, y - h)) / (h * h);
                if cxyy > 1e-5 {
                    return Err(SmotError::CostAssumption(format!(
                        "cost '{}': c_xyy = {cxyy:.6} > 0 at (x, y) = ({x}, {y})",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `c(x, y) = 1 - (y - x) - exp(-(y - x))`.
pub fn default_cost() -> CostFunction {
    CostFunction::new(
        "default",
        |x, y| {
            let d = y - x;
            -d - (-d).exp_m1()
        },
        |x, y| -(x - y).exp_m1(),
        |x, y| (x - y).exp_m1(),
    )
    .with_cxy(|x, y| (x - y).exp())
}

pub fn zero_cost() -> CostFunction {
    CostFunction::new("zero", |_, _| 0.0, |_, _| 0.0, |_, _| 0.0).with_cxy(|_, _| 0.0)
}

/// `(y - x)^2`, which has `c_xy = -2` and is rejected by the assumption check.
pub fn squared_cost() -> CostFunction {
    CostFunction::new("squared", |x, y| (y - x) * (y - x), |x, y| 2.0 * (x - y), |x, y| 2.0 * (y - x))
        .with_cxy(|_, _| -2.0)
}

/// Pathwise reward of a piecewise-constant path: the sum of `c(pre, post)`
/// over its jumps.
pub fn payoff_functional(path: &JumpPath, cost: &CostFunction) -> f64 {
    path.events.iter().map(|e| cost.c(e.pre, e.post)).sum()
}
