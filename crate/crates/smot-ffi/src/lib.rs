//! C ABI for the smot library.
//!
//! Objects are exposed as opaque handles created by `smot_*_new` functions
//! and released with the matching `smot_*_free`. Every fallible function
//! returns an integer status (`SMOT_OK` on success) and writes its results
//! through out-pointers. The message of the last failure on the calling
//! thread is available from [`smot_last_error_message`].
//!
//! # Safety
//!
//! Handle arguments must be null or pointers returned by this library that
//! have not been freed. Out-pointers must be null or point to writable
//! storage of the documented type, strings must be NUL-terminated and
//! array arguments must hold the documented number of values. Null pointers
//! are reported as `SMOT_ERR_NULL_POINTER`.

#![allow(clippy::missing_safety_doc)]

use smot::coupling1p::{DecreasingCoupling, MeasurePair, TransitionKernel};
use smot::curve::{ContCharacteristics, CurveMode};
use smot::duality::{build_continuous_dual, optimal_value_quadrature, CostFunction, DualStrategy};
use smot::error::{ErrorCategory, SmotError};
use smot::marginals::{make_uniform_family, BachelierFamily, GbmFamily, MarginalFamily, TabulatedFamily};
use smot::simulate::{run_discrete_chain, run_sde, Partition, PathEnsemble};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

pub const SMOT_OK: i32 = 0;
pub const SMOT_ERR_NULL_POINTER: i32 = 1;
pub const SMOT_ERR_INVALID_INPUT: i32 = 2;
pub const SMOT_ERR_NUMERICAL: i32 = 3;
pub const SMOT_ERR_IO: i32 = 4;
pub const SMOT_ERR_PANIC: i32 = 5;

pub const SMOT_FAMILY_UNIFORM: i32 = 0;
pub const SMOT_FAMILY_BACHELIER: i32 = 1;
pub const SMOT_FAMILY_GBM: i32 = 2;

pub const SMOT_CURVE_SPECIALISED: i32 = 0;
pub const SMOT_CURVE_GENERIC: i32 = 1;

/// A family of marginals `(mu_t)`.
pub struct SmotFamily {
    inner: Arc<dyn MarginalFamily>,
}

/// A one-period decreasing supermartingale coupling.
pub struct SmotCoupling {
    inner: DecreasingCoupling,
}

/// Continuous-time transition curves and jump characteristics of a family.
pub struct SmotCurve {
    inner: Arc<ContCharacteristics>,
}

/// Continuous-time dual superhedging strategy.
pub struct SmotDual {
    inner: DualStrategy,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Lib(SmotError),
}

impl From<SmotError> for Failure {
    fn from(e: SmotError) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SMOT_OK
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SMOT_ERR_NULL_POINTER
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.category() {
                ErrorCategory::Validation => SMOT_ERR_INVALID_INPUT,
                ErrorCategory::Numerical => SMOT_ERR_NUMERICAL,
                ErrorCategory::Io => SMOT_ERR_IO,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SMOT_ERR_PANIC
        }
    }
}

fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a handle obtained from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn put<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null out-pointers must point to writable storage for `T`.
    unsafe { p.write(value) };
    Ok(())
}

fn c_str(p: *const c_char, what: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null strings must be NUL-terminated.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Lib(SmotError::InvalidInput(format!("{what} is not valid UTF-8"))))
}

fn check_time(family: &dyn MarginalFamily, t: f64) -> Result<(), Failure> {
    if t >= family.t_min() && t <= family.t_max() {
        Ok(())
    } else {
        let domain = format!("[{}, {}]", family.t_min(), family.t_max());
        Err(SmotError::Domain { what: "time", value: t, domain }.into())
    }
}

fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` was produced by `Box::into_raw` in this library and is freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Copies the last error message of the calling thread into `buf` (NUL
/// terminated, truncated to `len - 1` bytes). Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn smot_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Creates a built-in family. `delta` is the start time of the Bachelier
/// and GBM families and is ignored for the uniform family.
#[no_mangle]
pub unsafe extern "C" fn smot_family_new(kind: i32, delta: f64, out: *mut *mut SmotFamily) -> i32 {
    guard(|| {
        let inner: Arc<dyn MarginalFamily> = match kind {
            SMOT_FAMILY_UNIFORM => make_uniform_family(),
            SMOT_FAMILY_BACHELIER => Arc::new(BachelierFamily::new(delta)?),
            SMOT_FAMILY_GBM => Arc::new(GbmFamily::new(delta)?),
            other => return Err(SmotError::InvalidInput(format!("unknown family kind {other}")).into()),
        };
        put(out, Box::into_raw(Box::new(SmotFamily { inner })), "out")
    })
}

/// Reads a tabulated family from a CSV file with header `t,x,f`.
#[no_mangle]
pub unsafe extern "C" fn smot_family_from_table(path: *const c_char, out: *mut *mut SmotFamily) -> i32 {
    guard(|| {
        let path = c_str(path, "path")?;
        let inner: Arc<dyn MarginalFamily> = Arc::new(TabulatedFamily::from_csv_path(std::path::Path::new(&path))?);
        put(out, Box::into_raw(Box::new(SmotFamily { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_family_free(family: *mut SmotFamily) {
    free_handle(family);
}

/// Start time of the family's time range.
#[no_mangle]
pub unsafe extern "C" fn smot_family_t_min(family: *const SmotFamily, out: *mut f64) -> i32 {
    guard(|| put(out, get(family, "family")?.inner.t_min(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn smot_family_cdf(family: *const SmotFamily, t: f64, x: f64, out: *mut f64) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        check_time(f.inner.as_ref(), t)?;
        put(out, f.inner.cdf(t, x), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_family_quantile(family: *const SmotFamily, t: f64, u: f64, out: *mut f64) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        if !(u > 0.0 && u < 1.0) {
            return Err(SmotError::Domain { what: "u", value: u, domain: "(0, 1)".into() }.into());
        }
        check_time(f.inner.as_ref(), t)?;
        put(out, f.inner.quantile(t, u), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_family_mean(family: *const SmotFamily, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        check_time(f.inner.as_ref(), t)?;
        put(out, f.inner.mean(t), "out")
    })
}

/// Builds the decreasing coupling of `mu_t` and `mu_{t + eps}`.
#[no_mangle]
pub unsafe extern "C" fn smot_coupling_new(family: *const SmotFamily, t: f64, eps: f64, out: *mut *mut SmotCoupling) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        let inner = DecreasingCoupling::build(MeasurePair::from_family(f.inner.as_ref(), t, eps)?)?;
        put(out, Box::into_raw(Box::new(SmotCoupling { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_coupling_free(coupling: *mut SmotCoupling) {
    free_handle(coupling);
}

/// Phase-transition point `x1`, left end `y1` of its image and the upper
/// density crossing `m_upper`.
#[no_mangle]
pub unsafe extern "C" fn smot_coupling_phase(
    coupling: *const SmotCoupling,
    x1: *mut f64,
    y1: *mut f64,
    m_upper: *mut f64,
) -> i32 {
    guard(|| {
        let c = &get(coupling, "coupling")?.inner;
        put(x1, c.phase().x1, "x1")?;
        put(y1, c.y1(), "y1")?;
        put(m_upper, c.m_upper(), "m_upper")
    })
}

/// Destinations `T_d(x)`, `T_u(x)` and the upward probability `q(x)`.
#[no_mangle]
pub unsafe extern "C" fn smot_coupling_branches(
    coupling: *const SmotCoupling,
    x: f64,
    t_d: *mut f64,
    t_u: *mut f64,
    q: *mut f64,
) -> i32 {
    guard(|| {
        let b = get(coupling, "coupling")?.inner.branches(x);
        put(t_d, b.t_d, "t_d")?;
        put(t_u, b.t_u, "t_u")?;
        put(q, b.q, "q")
    })
}

/// `T_u(x)` if `u < q(x)`, else `T_d(x)`.
#[no_mangle]
pub unsafe extern "C" fn smot_coupling_sample(coupling: *const SmotCoupling, x: f64, u: f64, out: *mut f64) -> i32 {
    guard(|| put(out, get(coupling, "coupling")?.inner.kernel_sample(x, u), "out"))
}

fn curve_mode(mode: i32) -> Result<CurveMode, Failure> {
    match mode {
        SMOT_CURVE_SPECIALISED => Ok(CurveMode::Specialised),
        SMOT_CURVE_GENERIC => Ok(CurveMode::Generic),
        other => Err(SmotError::InvalidInput(format!("unknown curve mode {other}")).into()),
    }
}

/// Tabulates the transition curves of `family`.
#[no_mangle]
pub unsafe extern "C" fn smot_curve_new(family: *const SmotFamily, mode: i32, out: *mut *mut SmotCurve) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        let inner = Arc::new(ContCharacteristics::new(f.inner.clone(), curve_mode(mode)?)?);
        put(out, Box::into_raw(Box::new(SmotCurve { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_curve_free(curve: *mut SmotCurve) {
    free_handle(curve);
}

/// `x1(t)` and `m_t`.
#[no_mangle]
pub unsafe extern "C" fn smot_curve_at(curve: *const SmotCurve, t: f64, x1: *mut f64, m: *mut f64) -> i32 {
    guard(|| {
        let c = &get(curve, "curve")?.inner;
        put(x1, c.solve_x1(t)?, "x1")?;
        put(m, c.solve_m(t)?, "m")
    })
}

/// Downward drift `jd`, upward jump size `ju`, jump intensity and target `T_u`.
#[no_mangle]
pub unsafe extern "C" fn smot_curve_characteristics(
    curve: *const SmotCurve,
    t: f64,
    x: f64,
    jd: *mut f64,
    ju: *mut f64,
    intensity: *mut f64,
    tu: *mut f64,
) -> i32 {
    guard(|| {
        let j = get(curve, "curve")?.inner.eval_jd_ju(t, x)?;
        put(jd, j.jd, "jd")?;
        put(ju, j.ju, "ju")?;
        put(intensity, j.intensity, "intensity")?;
        put(tu, j.tu, "tu")
    })
}

fn write_values(ens: &PathEnsemble, times: &[f64], out: *mut f64) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    for (j, &t) in times.iter().enumerate() {
        for (i, v) in ens.values_at(t)?.into_iter().enumerate() {
            // SAFETY: `out` holds `n_paths * n_times` values.
            unsafe { *out.add(i * times.len() + j) = v };
        }
    }
    Ok(())
}

fn times_slice<'a>(times: *const f64, n_times: usize) -> Result<&'a [f64], Failure> {
    if n_times == 0 {
        return Ok(&[]);
    }
    if times.is_null() {
        return Err(Failure::Null("times"));
    }
    // SAFETY: `times` holds `n_times` values.
    Ok(unsafe { std::slice::from_raw_parts(times, n_times) })
}

/// Simulates the continuous-time process with step `dt` and writes the path
/// values at `times` into `out`, row-major with one row per path
/// (`n_paths * n_times` values).
#[no_mangle]
pub unsafe extern "C" fn smot_simulate_sde(
    curve: *const SmotCurve,
    dt: f64,
    n_paths: usize,
    seed: u64,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let c = get(curve, "curve")?;
        let times = times_slice(times, n_times)?;
        let ens = run_sde(c.inner.clone(), dt, n_paths, seed, times)?;
        write_values(&ens, times, out)
    })
}

/// Simulates the `n`-period chain of decreasing couplings on an equal
/// partition of the family's time range; output layout as in
/// [`smot_simulate_sde`].
#[no_mangle]
pub unsafe extern "C" fn smot_simulate_chain(
    family: *const SmotFamily,
    n: usize,
    n_paths: usize,
    seed: u64,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let f = get(family, "family")?;
        let times = times_slice(times, n_times)?;
        let partition = Partition::for_family(f.inner.as_ref(), n)?;
        let ens = run_discrete_chain(f.inner.clone(), &partition, n_paths, seed, times)?;
        write_values(&ens, times, out)
    })
}

fn cost(name: *const c_char) -> Result<CostFunction, Failure> {
    let c = CostFunction::by_name(&c_str(name, "cost")?)?;
    c.check_assumption()?;
    Ok(c)
}

/// Optimal value of the transport problem for the named cost
/// (`"default"` or `"zero"`) and its quadrature error estimate.
#[no_mangle]
pub unsafe extern "C" fn smot_optimal_value(
    curve: *const SmotCurve,
    cost_name: *const c_char,
    value: *mut f64,
    error_estimate: *mut f64,
) -> i32 {
    guard(|| {
        let c = get(curve, "curve")?;
        let v = optimal_value_quadrature(&c.inner, &cost(cost_name)?)?;
        put(value, v.value, "value")?;
        put(error_estimate, v.error_estimate, "error_estimate")
    })
}

/// Builds the dual strategy for the named cost.
#[no_mangle]
pub unsafe extern "C" fn smot_dual_new(curve: *const SmotCurve, cost_name: *const c_char, out: *mut *mut SmotDual) -> i32 {
    guard(|| {
        let c = get(curve, "curve")?;
        let inner = build_continuous_dual(c.inner.clone(), &cost(cost_name)?)?;
        put(out, Box::into_raw(Box::new(SmotDual { inner })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn smot_dual_free(dual: *mut SmotDual) {
    free_handle(dual);
}

/// Hedge ratio `h*(t, x)` and value function `psi*(t, x)`.
#[no_mangle]
pub unsafe extern "C" fn smot_dual_eval(dual: *const SmotDual, t: f64, x: f64, h: *mut f64, psi: *mut f64) -> i32 {
    guard(|| {
        let d = &get(dual, "dual")?.inner;
        if !(t >= d.times()[0] && t <= 1.0) || !x.is_finite() {
            return Err(SmotError::Domain { what: "(t, x)", value: t, domain: format!("[{}, 1] x R", d.times()[0]) }.into());
        }
        let p = d.eval(t, x);
        put(h, p.h, "h")?;
        put(psi, p.psi, "psi")
    })
}
