//! Piecewise cubic Hermite interpolation.

/// Cubic Hermite interpolant through `(x_i, y_i)` with slopes `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Hermite {
    /// Builds an interpolant from explicit slopes. `x` must be strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == d.len());
        debug_assert!(x.windows(2).all(|w| w[1] > w[0]));
        Self { x, y, d }
    }

    /// Shape-preserving (Fritsch-Carlson) interpolant: monotone data give a
    /// monotone curve.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && n == y.len());
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Self { x, y, d };
        }
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Self { x, y, d }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Index `i` with `x_i <= t < x_{i+1}`, clamped to the table.
    pub fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        if t <= self.x[0] {
            return 0;
        }
        if t >= self.x[n - 1] {
            return n - 2;
        }
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Value; outside the knot range the end tangent line is used.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t > self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h * h10 * self.d[i] + h01 * self.y[i + 1] + h * h11 * self.d[i + 1]
    }

    /// First derivative of the interpolant.
    pub fn deriv(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t < self.x[0] {
            return self.d[0];
        }
        if t > self.x[n - 1] {
            return self.d[n - 1];
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let dh00 = (6.0 * s2 - 6.0 * s) / h;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s2 + 6.0 * s) / h;
        let dh11 = 3.0 * s2 - 2.0 * s;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }

    /// Integral of the interpolant from the first knot to `t` (`t` inside the table).
    pub fn integral_to(&self, t: f64, cumulative: &[f64]) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = ((t - self.x[i]) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let i00 = 0.5 * s4 - s3 + s;
        let i10 = 0.25 * s4 - 2.0 / 3.0 * s3 + 0.5 * s2;
        let i01 = -0.5 * s4 + s3;
        let i11 = 0.25 * s4 - s3 / 3.0;
        cumulative[i]
            + h * (i00 * self.y[i]
                + h * i10 * self.d[i]
                + i01 * self.y[i + 1]
                + h * i11 * self.d[i + 1])
    }

    /// Cumulative integrals at each knot, for use with [`Hermite::integral_to`].
    pub fn cumulative(&self) -> Vec<f64> {
        let n = self.x.len();
        let mut c = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.x[i + 1] - self.x[i];
            c[i + 1] = c[i]
                + h * (0.5 * (self.y[i] + self.y[i + 1]) + h * (self.d[i] - self.d[i + 1]) / 12.0);
        }
        c
    }
}

/// Piecewise quintic Hermite interpolant through values, first and second
/// derivatives. The second derivative may jump at a knot: `d2_left[i]` is
/// used on the cell ending at `x_i`, `d2_right[i]` on the cell starting there.
#[derive(Debug, Clone, PartialEq)]
pub struct Quintic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    d2_left: Vec<f64>,
    d2_right: Vec<f64>,
}

impl Quintic {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>, d2_left: Vec<f64>, d2_right: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n && d.len() == n && d2_left.len() == n && d2_right.len() == n);
        debug_assert!(x.windows(2).all(|w| w[1] > w[0]));
        Self { x, y, d, d2_left, d2_right }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and first derivative; outside the knot range the end tangent line is used.
    pub fn eval_with_deriv(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t < self.x[0] {
            return (self.y[0] + self.d[0] * (t - self.x[0]), self.d[0]);
        }
        if t > self.x[n - 1] {
            return (self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]), self.d[n - 1]);
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let b = [
            1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
            s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
            0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
            10.0 * s3 - 15.0 * s4 + 6.0 * s5,
            -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
            0.5 * (s3 - 2.0 * s4 + s5),
        ];
        let db = [
            -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
            1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
            0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
            30.0 * s2 - 60.0 * s3 + 30.0 * s4,
            -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
            0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
        ];
        let c = [
            self.y[i],
            h * self.d[i],
            h * h * self.d2_right[i],
            self.y[i + 1],
            h * self.d[i + 1],
            h * h * self.d2_left[i + 1],
        ];
        let v = (0..6).map(|k| b[k] * c[k]).sum();
        let dv = (0..6).map(|k| db[k] * c[k]).sum::<f64>() / h;
        (v, dv)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Piecewise-linear interpolation on a sorted table (clamped at the ends).
pub fn linear(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = match xs.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => return ys[i],
        Err(i) => i - 1,
    };
    let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..6).map(|i| -1.0 + 0.5 * i as f64).collect();
        let h = Hermite::new(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
        );
        for &t in &[-0.9, -0.1, 0.33, 1.4] {
            assert!((h.eval(t) - f(t)).abs() < 1e-13);
            assert!((h.deriv(t) - df(t)).abs() < 1e-12);
        }
        let cum = h.cumulative();
        let exact = |t: f64| 0.25 * t.powi(4) - t * t - (0.25 - 1.0);
        assert!((h.integral_to(1.4, &cum) - exact(1.4)).abs() < 1e-13);
    }

    #[test]
    fn quintic_reproduces_quintic() {
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x;
        let df = |x: f64| 5.0 * x.powi(4) - 6.0 * x * x + 1.0;
        let d2f = |x: f64| 20.0 * x.powi(3) - 12.0 * x;
        let xs: Vec<f64> = vec![-1.0, -0.3, 0.2, 1.1, 1.5];
        let d2: Vec<f64> = xs.iter().map(|&x| d2f(x)).collect();
        let q = Quintic::new(
            xs.clone(),
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| df(x)).collect(),
            d2.clone(),
            d2,
        );
        for &t in &[-0.9, -0.1, 0.33, 1.4, 1.5] {
            let (v, d) = q.eval_with_deriv(t);
            assert!((v - f(t)).abs() < 1e-13, "{t}");
            assert!((d - df(t)).abs() < 1e-12, "{t}");
        }
        assert_eq!(q.eval(2.0), f(1.5) + df(1.5) * 0.5);
    }

    #[test]
    fn monotone_stays_monotone() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.01, 0.02, 5.0, 5.01];
        let h = Hermite::monotone(xs, ys);
        let mut prev = h.eval(0.0);
        for i in 1..=400 {
            let v = h.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn linear_table() {
        assert_eq!(linear(&[0.0, 1.0], &[1.0, 3.0], 0.25), 1.5);
        assert_eq!(linear(&[0.0, 1.0], &[1.0, 3.0], 2.0), 3.0);
    }
}
