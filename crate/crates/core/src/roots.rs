//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`. The endpoints must bracket a sign change.
///
/// Stops when the bracket is narrower than `xtol` or after 200 halvings,
/// which exhausts f64 resolution for any finite bracket.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the first point on a log-spaced grid over `[lo, hi]` where `f`
/// goes from negative to non-negative, then refines it by bisection.
pub(crate) fn first_upcrossing<F>(f: F, lo: f64, hi: f64, points: usize, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    let mut prev_x = lo;
    let mut prev_f = f(lo);
    for i in 1..points {
        let x = lo * (ratio * i as f64).exp();
        let fx = f(x);
        if prev_f < 0.0 && fx >= 0.0 {
            return bisect(&f, prev_x, x, xtol);
        }
        prev_x = x;
        prev_f = fx;
    }
    Err(Error::NoBracket { lo, hi })
}
