//! Bracketed scalar root finding: a secant step is taken whenever it stays
//! inside the bracket and shrinks it fast enough, otherwise the bracket is bisected.

use crate::error::{Error, Result};

/// Finds a root of `f` in the bracket [a, b], where `f(a)` and `f(b)` have
/// opposite signs (or one of them is zero).
///
/// Iterates until the bracket is narrower than `rel_tol * max(|x|, 1e-300)`
/// or cannot be split further in floating point.
pub fn bracketed<F>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a, b);
    let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{a}, {b}]: f = ({f_lo:e}, {f_hi:e})"
        )));
    }
    let mut width = (hi - lo).abs();
    for _ in 0..400 {
        // secant through the bracket ends
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let inside = (x - lo) * (x - hi) < 0.0;
        if !inside || !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let new_width = (hi - lo).abs();
        // a secant step that fails to halve the bracket is followed by a bisection
        if new_width > 0.5 * width {
            let m = 0.5 * (lo + hi);
            let fm = f(m)?;
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == f_lo.signum() {
                lo = m;
                f_lo = fm;
            } else {
                hi = m;
                f_hi = fm;
            }
        }
        width = (hi - lo).abs();
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        let mid = 0.5 * (lo + hi);
        if width <= rel_tol * scale || mid == lo || mid == hi {
            break;
        }
    }
    // the endpoint with the smaller residual
    Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi })
}
