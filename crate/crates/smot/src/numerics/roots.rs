//! Bracketed scalar root finding.

use thiserror::Error;

/// Default absolute tolerance on the root location.
pub const X_TOL: f64 = 1e-10;
/// Default iteration budget.
pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("root not bracketed: f({a}) = {fa}, f({b}) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {iterations} iterations; last bracket [{a}, {b}]")]
    NoConvergence { iterations: usize, a: f64, b: f64 },
    #[error("function returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

/// Brent's method on `[a, b]` with the default tolerance and iteration budget.
pub fn brent<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64, RootError> {
    brent_with(f, a, b, X_TOL, MAX_ITER)
}

/// Brent's method (inverse quadratic interpolation with bisection safeguard).
///
/// The tolerance is `xtol + 4 eps |x|`, so it behaves as an absolute tolerance
/// near the origin and a relative one for large roots.
pub fn brent_with<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let fa = f(a);
    let fb = f(b);
    brent_from(&mut f, a, b, fa, fb, xtol, max_iter)
}

/// Brent's method when the endpoint values are already known.
pub fn brent_from<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: b });
        }
    }
    Err(RootError::NoConvergence {
        iterations: max_iter,
        a: b.min(c),
        b: b.max(c),
    })
}

/// Newton's method safeguarded by a sign-change bracket `[a, b]`.
///
/// `fdf` returns `(f(x), f'(x))`. Iteration starts at `x0` (clamped into the
/// bracket); any Newton step leaving the bracket or failing to halve the
/// bracket width over two iterations is replaced by bisection.
pub fn newton_bracketed<F: FnMut(f64) -> (f64, f64)>(
    mut fdf: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    x0: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    let (mut lo, mut hi) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = if x0.is_finite() && (x0 - a) * (x0 - b) < 0.0 { x0 } else { 0.5 * (a + b) };
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = fdf(x);
    for _ in 0..max_iter {
        if !fx.is_finite() {
            return Err(RootError::NonFinite { x });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton_ok = dfx != 0.0
            && dfx.is_finite()
            && ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) < 0.0
            && (2.0 * fx).abs() <= (dx_old * dfx).abs();
        dx_old = dx;
        if newton_ok {
            dx = fx / dfx;
            x -= dx;
        } else {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
        let tol = xtol + 4.0 * f64::EPSILON * x.abs();
        if dx.abs() <= tol || (hi - lo).abs() <= tol {
            return Ok(x);
        }
        let next = fdf(x);
        fx = next.0;
        dfx = next.1;
    }
    Err(RootError::NoConvergence { iterations: max_iter, a: lo.min(hi), b: lo.max(hi) })
}

/// Bisection on a monotone sign change; robust for discontinuous functions.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<f64, RootError> {
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { a, b, fa, fb });
    }
    let sa = fa.signum();
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for the minimiser of a unimodal function on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
