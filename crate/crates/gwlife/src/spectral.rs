//! Convergence radius and norm of the mean progeny matrix, recurrence
//! classification, invariant systems, and the asymptotic growth constant.
//!
//! The age-typed mean matrix `M` has column 1 equal to `m q_i` and
//! superdiagonal `q_i`. Everything here reduces to the scalar series
//! `F(s) = m Σ_{j>=1} Q_j s^j`:
//!
//! * `F(1) = m l` classifies criticality;
//! * the root of `F(s) = 1` (when it exists) is the convergence radius
//!   `γ = 1/ρ`;
//! * in the supercritical case the same root is the extinction probability
//!   of an auxiliary Galton-Watson process with pgf
//!   `B(s) = (1 + m s g(s)) / (1 + m)`;
//! * the series `S = m Σ_{j>=2} (j-1) Q_j γ^j` decides positive recurrence
//!   and enters the growth constant `(1 + 1/m) / (1 + S)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{LifetimeModel, OffspringModel};
use crate::extreal::ExtReal;
use crate::rootfind::{bisect, RootError, ROOT_TOL_X};
use crate::series::{power_tail, sum_series, KahanSum, SeriesOutcome};

/// Absolute tolerance for deciding `ml = 1`.
pub const CRITICALITY_TOL: f64 = 1e-12;

/// Upper end of the fixed-point bracket for `B(s) = s`; excludes the
/// artifact root at `s = 1`.
const B_BRACKET_END: f64 = 1.0 - 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("tolerance must lie in (0, 1e-6], got {0}")]
    InvalidTolerance(f64),
    #[error("cannot classify ml = {ml} against 1: root bracket degenerate near criticality")]
    IndeterminateCriticality { ml: f64 },
    #[error("no invariant system exists in the boundary case (F(s) = 1 has no root)")]
    NoInvariantSystem,
    #[error("index bound must be at least 2, got {0}")]
    IndexBoundTooSmall(usize),
    #[error("survival Q({0}) = 0: index range exceeds the lifetime support")]
    UnreachableIndex(u64),
    #[error("growth constant undefined: {0}")]
    GrowthConstantUndefined(String),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Which case of the radius characterization fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralCase {
    /// `ml < 1`, `F(R) >= 1`: γ is the root of `F(s) = 1` in `(1, R]`.
    SubcriticalRoot,
    /// `ml < 1`, `F(R) < 1`: γ = R, no root.
    SubcriticalBoundary,
    /// `ml = 1`: ρ = 1.
    Critical,
    /// `ml > 1`: γ is the smallest fixed point of `B(s) = s` in `[0, 1)`.
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Convergence radius γ (`f64::INFINITY` only in the degenerate
    /// zero-mean-lifetime boundary case).
    pub gamma: f64,
    /// Convergence norm ρ = 1/γ.
    pub rho: f64,
    pub case: SpectralCase,
    pub criticality: Criticality,
    #[serde(rename = "F_at_R")]
    pub f_at_r: ExtReal,
    #[serde(rename = "R")]
    pub r: ExtReal,
    /// `|F(γ) - 1|` or `|B(γ) - γ|`, depending on which equation was solved.
    pub root_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecurrenceClass {
    Transient,
    PositiveRecurrent,
    NullRecurrent,
}

/// Values behind the recurrence classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceEvidence {
    pub ml: f64,
    #[serde(rename = "F_at_R", skip_serializing_if = "Option::is_none")]
    pub f_at_r: Option<ExtReal>,
    /// `g''(1)`, when the clause depends on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifetime_second_factorial: Option<ExtReal>,
    pub clause: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub class: RecurrenceClass,
    pub evidence: RecurrenceEvidence,
}

/// Truncated γ-invariant vector and measure with derived sums.
///
/// `u[i]` and `v[i]` hold the 1-based components `u_1..u_K`, `v_1..v_K`
/// normalized to `u_1 = v_1 = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantSystem {
    #[serde(rename = "K")]
    pub k: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "S")]
    pub s_sum: ExtReal,
    /// Full-series `Σ u_i v_i` (componentwise products up to K plus a tail
    /// closure).
    pub vu: ExtReal,
    /// `(1 + 1/m) / (1 + S)`; zero-flagged when undefined.
    pub growth_constant: ExtReal,
    pub growth_constant_defined: bool,
    /// Alternative normalization `(1 + 1/m) / S`, emitted for comparison.
    pub growth_constant_alt: ExtReal,
}

/// `F(s) = m Σ_{j>=1} Q_j s^j`. Terms are built multiplicatively from the
/// hazards (`Q_j s^j = Q_{j-1} s^{j-1} · q_j s`) so neither factor over- or
/// underflows on its own.
pub fn f_eval(life: &LifetimeModel, m: f64, s: f64) -> ExtReal {
    assert!(s >= 0.0, "F argument must be nonnegative");
    if s == 0.0 {
        return ExtReal::Finite(0.0);
    }
    if s == 1.0 {
        return ExtReal::Finite(m * life.mean());
    }
    if let ExtReal::Finite(r) = life.tail_radius() {
        if s > r {
            return ExtReal::Inf;
        }
        if s == r {
            return f_at_boundary(life, m);
        }
    }
    let mut running = 0.0_f64;
    let sum = sum_series(
        |j| {
            if j == 1 {
                running = life.survival(1) * s;
            } else {
                running *= life.hazard(j) * s;
            }
            running
        },
        1,
    );
    if sum.diverged() {
        ExtReal::Inf
    } else {
        ExtReal::Finite(m * sum.value)
    }
}

/// Boundary value `F(R)` (as the monotone limit `s ↑ R`), evaluated in
/// closed form per lifetime family.
pub fn f_at_boundary(life: &LifetimeModel, m: f64) -> ExtReal {
    match life.tail_radius() {
        // Finite-support lifetimes: F is a polynomial, unbounded unless it
        // is identically zero (lifetime mass entirely at 0).
        ExtReal::Inf => {
            if life.mean() == 0.0 {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::Inf
            }
        }
        ExtReal::Finite(r) => {
            if r == 1.0 {
                return ExtReal::Finite(m * life.mean());
            }
            if let Some((a, b, norm)) = life.power_tilt_params() {
                // Σ_j Q_j R^j = Σ_i h_i R^i (1 + R^{-1} + ... ) collapses to
                // norm/(1-a) · Σ_i i^{-b} (1 - a^i), finite iff b > 1.
                if b <= 1.0 {
                    return ExtReal::Inf;
                }
                let plain = power_tail(b, 1);
                let tilted =
                    sum_series(|k| a.powi(k as i32) * (k as f64).powf(-b), 1).value;
                ExtReal::Finite(m * norm / (1.0 - a) * (plain - tilted))
            } else {
                // geometric lifetimes: Q_j R^j = 1 for every j
                ExtReal::Inf
            }
        }
    }
}

/// Auxiliary pgf `B(s) = (1 + m s g(s)) / (1 + m)` on `[0, 1]`.
pub fn b_pgf(off: &OffspringModel, life: &LifetimeModel, s: f64) -> f64 {
    assert!((0.0..=1.0).contains(&s), "B is defined on [0, 1]");
    let m = off.mean();
    let g = life
        .pgf_eval(s, 0)
        .finite()
        .expect("lifetime pgf is finite on [0, 1]");
    (1.0 + m * s * g) / (1.0 + m)
}

/// Convergence radius γ and norm ρ of the mean matrix.
pub fn convergence_radius(
    off: &OffspringModel,
    life: &LifetimeModel,
    tol: f64,
) -> Result<SpectralReport, SpectralError> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(SpectralError::InvalidTolerance(tol));
    }
    let m = off.mean();
    let ml = m * life.mean();
    let r = life.tail_radius();
    let f_at_r = f_at_boundary(life, m);

    if (ml - 1.0).abs() <= CRITICALITY_TOL {
        return Ok(SpectralReport {
            gamma: 1.0,
            rho: 1.0,
            case: SpectralCase::Critical,
            criticality: Criticality::Critical,
            f_at_r,
            r,
            root_residual: (ml - 1.0).abs(),
        });
    }

    if ml > 1.0 {
        let gamma = bisect(|s| b_pgf(off, life, s) - s, 0.0, B_BRACKET_END, ROOT_TOL_X)
            .map_err(|_| SpectralError::IndeterminateCriticality { ml })?;
        return Ok(SpectralReport {
            gamma,
            rho: 1.0 / gamma,
            case: SpectralCase::Supercritical,
            criticality: Criticality::Supercritical,
            f_at_r,
            r,
            root_residual: (b_pgf(off, life, gamma) - gamma).abs(),
        });
    }

    // ml < 1
    let boundary_ge_one = match f_at_r {
        ExtReal::Inf => true,
        ExtReal::Finite(v) => v >= 1.0,
    };
    if boundary_ge_one {
        let objective = |s: f64| match f_eval(life, m, s) {
            ExtReal::Finite(v) => v - 1.0,
            ExtReal::Inf => f64::INFINITY,
        };
        let hi = match r {
            ExtReal::Finite(rr) => rr,
            ExtReal::Inf => {
                let mut hi = 2.0;
                while objective(hi) < 0.0 {
                    hi *= 2.0;
                    if hi > 1e18 {
                        return Err(SpectralError::IndeterminateCriticality { ml });
                    }
                }
                hi
            }
        };
        let gamma = bisect(objective, 1.0, hi, ROOT_TOL_X)?;
        let root_residual = match f_eval(life, m, gamma) {
            ExtReal::Finite(v) => (v - 1.0).abs(),
            ExtReal::Inf => f64::INFINITY,
        };
        Ok(SpectralReport {
            gamma,
            rho: 1.0 / gamma,
            case: SpectralCase::SubcriticalRoot,
            criticality: Criticality::Subcritical,
            f_at_r,
            r,
            root_residual,
        })
    } else {
        let gamma = r.to_f64();
        Ok(SpectralReport {
            gamma,
            rho: if gamma.is_infinite() { 0.0 } else { 1.0 / gamma },
            case: SpectralCase::SubcriticalBoundary,
            criticality: Criticality::Subcritical,
            f_at_r,
            r,
            root_residual: 0.0,
        })
    }
}

/// Recurrence classification of the process.
pub fn classify(
    off: &OffspringModel,
    life: &LifetimeModel,
) -> Result<RecurrenceReport, SpectralError> {
    let m = off.mean();
    let ml = m * life.mean();
    if (ml - 1.0).abs() <= CRITICALITY_TOL {
        let g2 = life.second_factorial_moment();
        let (class, clause) = if g2.is_finite() {
            (RecurrenceClass::PositiveRecurrent, "ml = 1 and g''(1) < inf")
        } else {
            (RecurrenceClass::NullRecurrent, "ml = 1 and g''(1) = inf")
        };
        return Ok(RecurrenceReport {
            class,
            evidence: RecurrenceEvidence {
                ml,
                f_at_r: None,
                lifetime_second_factorial: Some(g2),
                clause: clause.to_string(),
            },
        });
    }
    if ml > 1.0 {
        return Ok(RecurrenceReport {
            class: RecurrenceClass::PositiveRecurrent,
            evidence: RecurrenceEvidence {
                ml,
                f_at_r: None,
                lifetime_second_factorial: None,
                clause: "ml > 1".to_string(),
            },
        });
    }
    let f_at_r = f_at_boundary(life, m);
    let ge_one = match f_at_r {
        ExtReal::Inf => true,
        ExtReal::Finite(v) => v >= 1.0,
    };
    let (class, clause) = if ge_one {
        (RecurrenceClass::PositiveRecurrent, "ml < 1 and F(R) >= 1")
    } else {
        (RecurrenceClass::Transient, "ml < 1 and F(R) < 1")
    };
    Ok(RecurrenceReport {
        class,
        evidence: RecurrenceEvidence {
            ml,
            f_at_r: Some(f_at_r),
            lifetime_second_factorial: None,
            clause: clause.to_string(),
        },
    })
}

/// Tail `m Σ_{j>=start} Q_j γ^j`, finite in every root case.
fn f_tail(life: &LifetimeModel, m: f64, gamma: f64, start: u64) -> f64 {
    if gamma == 1.0 {
        if let Some((a, b, norm)) = life.power_tilt_params() {
            if a == 1.0 {
                // Σ_{j>=s} Q_j = norm Σ_{i>=s} (i - s + 1) i^{-b}
                let s0 = start as f64;
                return m
                    * norm
                    * (power_tail(b - 1.0, start) - (s0 - 1.0) * power_tail(b, start));
            }
        }
    }
    let mut running = 0.0_f64;
    let sum = sum_series(
        |j| {
            if j == start {
                running = survival_power(life, gamma, start);
            } else {
                running *= life.hazard(j) * gamma;
            }
            running
        },
        start,
    );
    m * sum.value
}

/// `Q_k γ^k` built multiplicatively.
fn survival_power(life: &LifetimeModel, gamma: f64, k: u64) -> f64 {
    let mut w = 1.0;
    for i in 1..=k {
        w *= life.hazard(i) * gamma;
        if w == 0.0 {
            return 0.0;
        }
    }
    w
}

/// `m Σ_{j>=start} (j - start + 1) Q_j γ^j`: with `start = 2` this is the
/// recurrence series `S`; larger starts close the tail of `Σ u_i v_i`.
fn weighted_tail(life: &LifetimeModel, m: f64, gamma: f64, start: u64) -> ExtReal {
    if gamma == 1.0 {
        if let Some((a, b, norm)) = life.power_tilt_params() {
            if a == 1.0 {
                if b <= 3.0 {
                    return ExtReal::Inf;
                }
                // Σ_{j>=s} (j-s+1) Q_j = norm/2 Σ_{i>=s} (i-d)(i-d+1) i^{-b}, d = s-1
                let d = start as f64 - 1.0;
                let v = 0.5
                    * m
                    * norm
                    * (power_tail(b - 2.0, start) + (1.0 - 2.0 * d) * power_tail(b - 1.0, start)
                        + d * (d - 1.0) * power_tail(b, start));
                return ExtReal::Finite(v);
            }
        }
    }
    let mut running = 0.0_f64;
    let sum = sum_series(
        |j| {
            if j == start {
                running = survival_power(life, gamma, start);
            } else {
                running *= life.hazard(j) * gamma;
            }
            (j - start + 1) as f64 * running
        },
        start,
    );
    match sum.outcome {
        SeriesOutcome::Converged => ExtReal::Finite(m * sum.value),
        SeriesOutcome::Diverged => ExtReal::Inf,
        SeriesOutcome::Capped => {
            // slow decay: decide finiteness analytically, keep the partial sum
            if s_is_finite(life, m, gamma) {
                ExtReal::Finite(m * sum.value)
            } else {
                ExtReal::Inf
            }
        }
    }
}

/// Finiteness criterion for `S`: automatic for γ < 1, `g''(1) < ∞` at
/// criticality, `g'(γ) < ∞` for γ > 1.
fn s_is_finite(life: &LifetimeModel, _m: f64, gamma: f64) -> bool {
    if gamma < 1.0 {
        true
    } else if gamma == 1.0 {
        life.second_factorial_moment().is_finite()
    } else {
        life.pgf_eval(gamma, 1).is_finite()
    }
}

/// The recurrence series `S = m Σ_{j>=2} (j-1) Q_j γ^j`.
pub fn recurrence_series(life: &LifetimeModel, m: f64, gamma: f64) -> ExtReal {
    weighted_tail(life, m, gamma, 2)
}

/// Truncated γ-invariant vector `u` and measure `v` with the sums `S`,
/// `v·u` and the growth constant. Only exists in the root cases.
pub fn invariant_system(
    off: &OffspringModel,
    life: &LifetimeModel,
    k: usize,
) -> Result<InvariantSystem, SpectralError> {
    if k < 2 {
        return Err(SpectralError::IndexBoundTooSmall(k));
    }
    let report = convergence_radius(off, life, 1e-12)?;
    if report.case == SpectralCase::SubcriticalBoundary {
        return Err(SpectralError::NoInvariantSystem);
    }
    let m = off.mean();
    let gamma = report.gamma;
    if life.survival(k as u64 - 1) <= 0.0 {
        return Err(SpectralError::UnreachableIndex(k as u64 - 1));
    }

    // w[i] = Q_i γ^i, built multiplicatively
    let mut w = vec![1.0_f64; k + 1];
    for i in 1..=k {
        w[i] = w[i - 1] * life.hazard(i as u64) * gamma;
    }
    // t[i] = m Σ_{j>=i} Q_j γ^j accumulated backwards from one tail closure;
    // t[1] = F(γ) = 1 up to the root residual.
    let mut t = vec![0.0_f64; k + 2];
    t[k + 1] = f_tail(life, m, gamma, k as u64 + 1);
    for i in (1..=k).rev() {
        t[i] = t[i + 1] + m * w[i];
    }

    // u_i = (1 - F_{i-1}(γ)) / (γ^{i-1} Q_{i-1}) = t_i / w_{i-1},
    // rescaled so u_1 is exactly 1. v_i = Q_{i-1} γ^{i-1}.
    let scale = t[1];
    let u: Vec<f64> = (1..=k).map(|i| t[i] / w[i - 1] / scale).collect();
    let v: Vec<f64> = (1..=k).map(|i| w[i - 1]).collect();

    let s_sum = recurrence_series(life, m, gamma);

    let mut head = KahanSum::new();
    for i in 0..k {
        head.add(u[i] * v[i]);
    }
    let vu = match weighted_tail(life, m, gamma, k as u64 + 1) {
        ExtReal::Finite(tail) => ExtReal::Finite(head.value() + tail),
        ExtReal::Inf => ExtReal::Inf,
    };

    let f2_finite = off.second_factorial_moment().is_finite();
    let (growth_constant, growth_constant_defined) = match s_sum {
        ExtReal::Finite(s) if f2_finite => {
            (ExtReal::Finite((1.0 + 1.0 / m) / (1.0 + s)), true)
        }
        _ => (ExtReal::Finite(0.0), false),
    };
    let growth_constant_alt = match s_sum {
        ExtReal::Finite(s) if s > 0.0 => ExtReal::Finite((1.0 + 1.0 / m) / s),
        ExtReal::Finite(_) => ExtReal::Inf,
        ExtReal::Inf => ExtReal::Finite(0.0),
    };

    Ok(InvariantSystem {
        k,
        u,
        v,
        s_sum,
        vu,
        growth_constant,
        growth_constant_defined,
        growth_constant_alt,
    })
}

/// Asymptotic growth constant `lim ρ^{-n} E(1·Z_n) = (1 + 1/m) / (1 + S)`.
pub fn growth_constant(
    off: &OffspringModel,
    life: &LifetimeModel,
) -> Result<f64, SpectralError> {
    let rec = classify(off, life)?;
    if rec.class != RecurrenceClass::PositiveRecurrent {
        return Err(SpectralError::GrowthConstantUndefined(format!(
            "process is {:?}, not positive recurrent",
            rec.class
        )));
    }
    if off.second_factorial_moment().is_inf() {
        return Err(SpectralError::GrowthConstantUndefined(
            "offspring second factorial moment f''(1) is infinite".to_string(),
        ));
    }
    let report = convergence_radius(off, life, 1e-12)?;
    let m = off.mean();
    match recurrence_series(life, m, report.gamma) {
        ExtReal::Finite(s) => Ok((1.0 + 1.0 / m) / (1.0 + s)),
        ExtReal::Inf => Err(SpectralError::GrowthConstantUndefined(
            "S is infinite".to_string(),
        )),
    }
}
