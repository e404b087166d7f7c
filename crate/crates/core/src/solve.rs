//! Scalar root finding for monotone functions.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const MAX_EXPANSIONS: usize = 200;

/// Finds `x` in `[lo, hi]` with `f(x) = 0` for a nondecreasing `f`.
///
/// `f` returns `(value, derivative)`. Newton steps are taken when they stay
/// inside the current bracket, bisection otherwise, so convergence is global.
/// Stops when `|f(x)| <= tol_f` or the bracket is narrower than `tol_x`.
pub fn increasing_root<F>(mut f: F, mut lo: f64, mut hi: f64, tol_x: f64, tol_f: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo > 0.0 || fhi < 0.0 || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numerical(format!(
            "root not bracketed on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx.is_nan() {
            return Err(Error::Numerical(format!("NaN at x={x}")));
        }
        if fx.abs() <= tol_f {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol_x * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = x - fx / dfx;
        x = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

/// Grows `start + step·2^j` in the direction of `step` until `pred` holds.
pub fn expand_until<P>(start: f64, step: f64, mut pred: P) -> Result<f64>
where
    P: FnMut(f64) -> bool,
{
    let mut s = step;
    for _ in 0..MAX_EXPANSIONS {
        let x = start + s;
        if !x.is_finite() {
            break;
        }
        if pred(x) {
            return Ok(x);
        }
        s *= 2.0;
    }
    Err(Error::Numerical(format!("bracket expansion from {start} failed")))
}
