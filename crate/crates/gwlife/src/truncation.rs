//! Northwest-corner truncations of the mean matrix.
//!
//! The k×k truncation `M^(k)` keeps column 1 (`m q_i`) and the superdiagonal
//! (`q_i`) — at most two nonzeros per row, so matrix-vector products are
//! O(k). Its spectral radius `ρ_k` increases to the convergence norm ρ, and
//! `(M^(K))^n` with `K = n + 1` gives expected population vectors exactly
//! (a newborn cannot reach age beyond n in n seasons).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{LifetimeModel, OffspringModel};
use crate::rootfind::{bisect, RootError, ROOT_TOL_X};
use crate::series::KahanSum;

/// Iteration cap for the power method.
pub const POWER_ITER_MAX: u32 = 100_000;

/// Collatz-Wielandt gap at which the power method stops.
pub const POWER_ITER_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TruncationError {
    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(u32),
    #[error(transparent)]
    Root(#[from] RootError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    PowerIteration,
    ScalarRoot,
}

impl std::fmt::Display for RadiusMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadiusMethod::PowerIteration => write!(f, "power_iteration"),
            RadiusMethod::ScalarRoot => write!(f, "scalar_root"),
        }
    }
}

/// Sparse k×k truncation: `m_ij = m q_i` for `j = 1`, `q_i` for `j = i+1`,
/// zero otherwise (1-based indices).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedMatrix {
    pub k: usize,
    pub m: f64,
    /// Hazards `q_1..q_k`.
    pub q: Vec<f64>,
}

impl TruncatedMatrix {
    /// Entry `m_ij`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(i >= 1 && i <= self.k && j >= 1 && j <= self.k);
        if j == 1 {
            self.m * self.q[i - 1]
        } else if j == i + 1 {
            self.q[i - 1]
        } else {
            0.0
        }
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k;
        (0..k)
            .map(|i| {
                let next = if i + 1 < k { x[i + 1] } else { 0.0 };
                self.q[i] * (self.m * x[0] + next)
            })
            .collect()
    }

    /// `y = x M` (left multiplication by a row vector).
    pub fn apply_left(&self, x: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut y = vec![0.0; k];
        let mut first = KahanSum::new();
        for i in 0..k {
            first.add(x[i] * self.m * self.q[i]);
            if i + 1 < k {
                y[i + 1] = x[i] * self.q[i];
            }
        }
        y[0] = first.value();
        y
    }
}

/// Spectral radii of increasing truncations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusSequence {
    pub k_values: Vec<usize>,
    pub rho_k: Vec<f64>,
    pub method: RadiusMethod,
}

impl RadiusSequence {
    /// `k,rho_k,method` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,rho_k,method\n");
        for (k, rho) in self.k_values.iter().zip(&self.rho_k) {
            out.push_str(&format!("{k},{rho},{}\n", self.method));
        }
        out
    }
}

pub fn truncated_matrix(
    off: &OffspringModel,
    life: &LifetimeModel,
    k: usize,
) -> Result<TruncatedMatrix, TruncationError> {
    if k < 1 {
        return Err(TruncationError::DimensionTooSmall { min: 1, got: k });
    }
    let q = (1..=k as u64).map(|i| life.hazard(i)).collect();
    Ok(TruncatedMatrix {
        k,
        m: off.mean(),
        q,
    })
}

/// `F_k(s) = m Σ_{j<=k} Q_j s^j`, evaluated by Horner's rule. Its unique
/// positive root `s_k` satisfies `ρ_k = 1/s_k`.
fn f_truncated(off: &OffspringModel, life: &LifetimeModel, k: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for j in (1..=k as u64).rev() {
        acc = s * (life.survival(j) + acc);
    }
    off.mean() * acc
}

/// Spectral radius of the k×k truncation.
pub fn truncated_radius(
    off: &OffspringModel,
    life: &LifetimeModel,
    k: usize,
    method: RadiusMethod,
) -> Result<f64, TruncationError> {
    if k < 1 {
        return Err(TruncationError::DimensionTooSmall { min: 1, got: k });
    }
    match method {
        RadiusMethod::ScalarRoot => {
            let q1 = life.hazard(1);
            // F_k(s) >= m Q_1 s puts the root at or below 1/(m q_1); the
            // margin keeps the bracket valid when k = 1 makes that exact
            let hi = (1.0 + 1e-9) / (off.mean() * q1);
            let root = bisect(
                |s| f_truncated(off, life, k, s) - 1.0,
                0.0,
                hi,
                ROOT_TOL_X,
            )?;
            Ok(1.0 / root)
        }
        RadiusMethod::PowerIteration => {
            // restrict to the leading irreducible block: rows past the
            // maximum attainable age are zero
            let k_eff = match life.max_age() {
                Some(a) => k.min((a as usize).max(1)),
                None => k,
            };
            let mat = truncated_matrix(off, life, k_eff)?;
            // iterate (M + I)/2: primitive whenever M is irreducible, so the
            // Collatz-Wielandt bounds close; report the radius of M
            let mut x = vec![1.0 / k_eff as f64; k_eff];
            for _ in 0..POWER_ITER_MAX {
                let mx = mat.apply(&x);
                let y: Vec<f64> = mx.iter().zip(&x).map(|(a, b)| 0.5 * (a + b)).collect();
                let mut lo = f64::INFINITY;
                let mut hi = 0.0_f64;
                for (yi, xi) in y.iter().zip(&x) {
                    let r = yi / xi;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                if hi - lo <= POWER_ITER_TOL * hi {
                    return Ok(2.0 * 0.5 * (lo + hi) - 1.0);
                }
                let norm: f64 = y.iter().sum();
                x = y.into_iter().map(|v| v / norm).collect();
            }
            Err(TruncationError::NonConvergence(POWER_ITER_MAX))
        }
    }
}

/// `ρ_1..ρ_k_max` via the scalar-root characterization.
pub fn radius_sequence(
    off: &OffspringModel,
    life: &LifetimeModel,
    k_max: usize,
) -> Result<RadiusSequence, TruncationError> {
    if k_max < 2 {
        return Err(TruncationError::DimensionTooSmall { min: 2, got: k_max });
    }
    let mut rho_k = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        rho_k.push(truncated_radius(off, life, k, RadiusMethod::ScalarRoot)?);
    }
    Ok(RadiusSequence {
        k_values: (1..=k_max).collect(),
        rho_k,
        method: RadiusMethod::ScalarRoot,
    })
}

/// `E(w · Z_n | Z_0 = e_1)`, exact: first row of `(M^(K))^n` with
/// `K = n + 1` applied to the weights (all ones when absent; short weight
/// vectors are padded with ones).
pub fn mean_total(
    off: &OffspringModel,
    life: &LifetimeModel,
    n: u32,
    weights: Option<&[f64]>,
) -> f64 {
    let k = n as usize + 1;
    let mat = truncated_matrix(off, life, k).expect("k >= 1");
    let mut z = vec![0.0; k];
    z[0] = 1.0;
    for _ in 0..n {
        z = mat.apply_left(&z);
    }
    let mut total = KahanSum::new();
    for (i, zi) in z.iter().enumerate() {
        let w = weights.and_then(|w| w.get(i).copied()).unwrap_or(1.0);
        total.add(zi * w);
    }
    total.value()
}
