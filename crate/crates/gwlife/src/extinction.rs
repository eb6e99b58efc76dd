//! Extinction probability of the process.
//!
//! The process dies out with the smallest nonnegative root `q` of
//! `g(f(s)) = s`: an individual's line goes extinct iff the lines of all its
//! offspring do, and reproduction happens once at death. `q = 1` exactly when
//! `m l <= 1`.

use serde::{Deserialize, Serialize};

use crate::distributions::{LifetimeModel, OffspringModel};
use crate::rootfind::{bisect, ROOT_TOL_X};
use crate::spectral::CRITICALITY_TOL;

/// Fixed-point iteration cap; near-critical models converge slowly and are
/// finished off by the bisection polish.
pub const EXTINCTION_MAX_ITER: u64 = 1_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub q: f64,
    pub certain: bool,
    /// `|g(f(q)) - q|`.
    pub residual: f64,
    pub iterations: u64,
}

/// `g(f(s))` on `[0, 1]`, the pgf of the number of lines alive after one
/// complete lifetime.
fn composed_pgf(off: &OffspringModel, life: &LifetimeModel, s: f64) -> f64 {
    let inner = off
        .pgf_eval(s, 0)
        .finite()
        .expect("offspring pgf is finite on [0, 1]");
    life.pgf_eval(inner, 0)
        .finite()
        .expect("lifetime pgf is finite on [0, 1]")
}

/// Whether extinction is certain: `m l <= 1` (within the criticality
/// tolerance).
pub fn is_certain_extinction(off: &OffspringModel, life: &LifetimeModel) -> bool {
    off.mean() * life.mean() <= 1.0 + CRITICALITY_TOL
}

/// Smallest nonnegative root of `g(f(s)) = s`.
///
/// Monotone fixed-point iteration from 0 climbs to the smallest root; a
/// bisection polish then pins it down independent of how slowly the
/// iteration moved (the near-critical case).
pub fn extinction_probability(
    off: &OffspringModel,
    life: &LifetimeModel,
    tol: f64,
) -> ExtinctionReport {
    assert!(tol > 0.0 && tol <= 1e-8, "tolerance must lie in (0, 1e-8]");
    if is_certain_extinction(off, life) {
        return ExtinctionReport {
            q: 1.0,
            certain: true,
            residual: (composed_pgf(off, life, 1.0) - 1.0).abs(),
            iterations: 0,
        };
    }
    let gf = |s: f64| composed_pgf(off, life, s);
    let mut s = 0.0_f64;
    let mut iterations = 0u64;
    while iterations < EXTINCTION_MAX_ITER {
        let next = gf(s);
        iterations += 1;
        let done = (next - s).abs() < tol;
        s = next;
        if done {
            break;
        }
    }
    // gf(x) - x is >= 0 below the smallest root and < 0 just past it
    // (supercritical case: the graph recrosses the diagonal only at 1).
    let hi = 1.0 - 1e-9;
    let q = if s < hi {
        bisect(|x| gf(x) - x, s, hi, ROOT_TOL_X).unwrap_or(s)
    } else {
        s
    };
    ExtinctionReport {
        q,
        certain: false,
        residual: (gf(q) - q).abs(),
        iterations,
    }
}
