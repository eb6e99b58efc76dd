//! Bisection with bracket verification.

use thiserror::Error;

/// Argument tolerance for bisection.
pub const ROOT_TOL_X: f64 = 1e-12;

/// Iteration cap for bisection.
pub const MAX_BISECT_ITER: u32 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
}

/// Smallest root of `f` on `[lo, hi]` given `f(lo) <= 0 <= f(hi)` or
/// `f(lo) >= 0 >= f(hi)`. `f` may return `+inf` (treated as positive).
/// Bisection halves the bracket until its width is below `tol_x`
/// relative to the endpoint magnitude.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol_x: f64) -> Result<f64, RootError> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NoBracket { lo, hi, flo, fhi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let neg_at_lo = flo < 0.0;
    for _ in 0..MAX_BISECT_ITER {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol_x * hi.abs().max(1.0) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
