//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Infinite endpoints are handled through `x = c + s tan(theta)`, which maps
//! the real line onto `(-pi/2, pi/2)`.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

/// Default absolute tolerance.
pub const QUAD_TOL: f64 = 1e-9;
const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * h;
    let err = ((resk - resg) * h).abs();
    (value, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over a finite interval to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, intervals: 0 };
    }
    if a > b {
        let q = integrate(f, b, a, tol);
        return Quadrature { value: -q.value, ..q };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, err: e });
    let mut total_err = e;
    while total_err > tol && heap.len() < MAX_INTERVALS {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, err: e2 });
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let intervals = heap.len();
    for p in heap {
        value += p.value;
        error += p.err;
    }
    Quadrature { value, error, intervals }
}

/// Integrates over a possibly infinite interval. `center` and `scale` set the
/// tangent substitution used for infinite endpoints.
pub fn integrate_inf<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    center: f64,
    scale: f64,
    tol: f64,
) -> Quadrature {
    if a.is_finite() && b.is_finite() {
        return integrate(f, a, b, tol);
    }
    let to_theta = |x: f64| {
        if x == f64::NEG_INFINITY {
            -FRAC_PI_2
        } else if x == f64::INFINITY {
            FRAC_PI_2
        } else {
            ((x - center) / scale).atan()
        }
    };
    let ta = to_theta(a);
    let tb = to_theta(b);
    integrate(
        |th| {
            let c = th.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let x = center + scale * th.tan();
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (c * c)
            }
        },
        ta,
        tb,
        tol,
    )
}

/// Fixed Gauss-Legendre rule on `[a, b]` with 5 nodes.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664_0,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664_0,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += W[i] * f(c + h * X[i]);
    }
    s * h
}

/// Nodes and weights of the 5-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre5_unit() -> ([f64; 5], [f64; 5]) {
    let x = [
        0.046_910_077_030_668_0,
        0.230_765_344_947_158_5,
        0.5,
        0.769_234_655_052_841_5,
        0.953_089_922_969_332_0,
    ];
    let w = [
        0.118_463_442_528_094_5,
        0.239_314_335_249_683_2,
        0.284_444_444_444_444_4,
        0.239_314_335_249_683_2,
        0.118_463_442_528_094_5,
    ];
    (x, w)
}
