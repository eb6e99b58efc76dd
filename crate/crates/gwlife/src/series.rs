//! Series summation with a uniform convergence policy.
//!
//! All infinite sums in this crate (pgf evaluations, tail products, the
//! spectral series) go through [`sum_series`]: truncate when the running
//! geometric-ratio tail majorant drops below `TAIL_TOL`, declare divergence
//! when partial sums exceed `DIVERGENCE_SUM` or the term ratio stays at or
//! above one for [`DIVERGENCE_RUN`] consecutive terms.

/// Absolute/relative tail tolerance for truncating convergent series.
pub const TAIL_TOL: f64 = 1e-14;

/// Partial sums above this value are declared divergent.
pub const DIVERGENCE_SUM: f64 = 1e12;

/// Consecutive term ratios `>= 1` before declaring divergence.
pub const DIVERGENCE_RUN: u32 = 64;

/// Default hard cap on the number of terms.
pub const MAX_TERMS: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOutcome {
    /// Tail majorant certified below tolerance.
    Converged,
    /// Partial sums exceeded the divergence threshold or term ratios stayed >= 1.
    Diverged,
    /// Term cap hit before the tail bound was certified; `value` is a partial sum.
    Capped,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub value: f64,
    /// Last computed tail majorant (meaningful for `Converged` and `Capped`).
    pub tail_bound: f64,
    pub outcome: SeriesOutcome,
    pub terms: u64,
}

impl SeriesSum {
    pub fn diverged(&self) -> bool {
        self.outcome == SeriesOutcome::Diverged
    }
}

/// Sum `term(start) + term(start+1) + ...` for a nonnegative term sequence
/// whose ratios settle (geometric or polynomial decay). A zero term ends the
/// sum: with nonincreasing tails every later term is zero too.
pub fn sum_series(mut term: impl FnMut(u64) -> f64, start: u64) -> SeriesSum {
    sum_series_with(&mut term, start, TAIL_TOL, MAX_TERMS)
}

pub fn sum_series_with(
    term: &mut impl FnMut(u64) -> f64,
    start: u64,
    tail_tol: f64,
    max_terms: u64,
) -> SeriesSum {
    let mut sum = KahanSum::new();
    let mut prev = 0.0_f64;
    let mut seen_positive = false;
    let mut ratio_run = 0u32;
    let mut tail_bound = f64::INFINITY;

    for j in start..start.saturating_add(max_terms) {
        let t = term(j);
        let count = j - start + 1;
        debug_assert!(t >= 0.0, "series terms must be nonnegative");
        if t == 0.0 {
            return SeriesSum {
                value: sum.value(),
                tail_bound: 0.0,
                outcome: SeriesOutcome::Converged,
                terms: count,
            };
        }
        sum.add(t);
        if sum.value() > DIVERGENCE_SUM {
            return SeriesSum {
                value: sum.value(),
                tail_bound: f64::INFINITY,
                outcome: SeriesOutcome::Diverged,
                terms: count,
            };
        }
        if seen_positive {
            let ratio = t / prev;
            if ratio >= 1.0 {
                ratio_run += 1;
                if ratio_run >= DIVERGENCE_RUN {
                    return SeriesSum {
                        value: sum.value(),
                        tail_bound: f64::INFINITY,
                        outcome: SeriesOutcome::Diverged,
                        terms: count,
                    };
                }
            } else {
                ratio_run = 0;
                tail_bound = t * ratio / (1.0 - ratio);
                // relative criterion: sums can be legitimately tiny (deep
                // survival tails), so no absolute floor
                if tail_bound <= tail_tol * sum.value() {
                    return SeriesSum {
                        value: sum.value(),
                        tail_bound,
                        outcome: SeriesOutcome::Converged,
                        terms: count,
                    };
                }
            }
        }
        seen_positive = true;
        prev = t;
    }
    SeriesSum {
        value: sum.value(),
        tail_bound,
        outcome: SeriesOutcome::Capped,
        terms: max_terms,
    }
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// `Σ_{i>=start} i^{-p}` for `p > 1`, via partial sum plus an Euler-Maclaurin
/// tail. Accurate to near machine precision; polynomial decay makes direct
/// summation to `TAIL_TOL` infeasible.
pub fn power_tail(p: f64, start: u64) -> f64 {
    assert!(p > 1.0, "power_tail requires p > 1");
    let start = start.max(1);
    let cutoff = start + 64;
    let mut sum = KahanSum::new();
    for i in start..cutoff {
        sum.add((i as f64).powf(-p));
    }
    let x = cutoff as f64;
    let fx = x.powf(-p);
    let mut tail = x.powf(1.0 - p) / (p - 1.0) + 0.5 * fx;
    tail += p * fx / x / 12.0;
    tail -= p * (p + 1.0) * (p + 2.0) * fx / x.powi(3) / 720.0;
    tail += p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * fx / x.powi(5) / 30240.0;
    sum.value() + tail
}
