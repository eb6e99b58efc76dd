//! Acceptance gate: eight end-to-end criteria, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Every tolerance is pinned as a named constant next to the criterion that
//! uses it.

use gwlife::distributions::{
    make_lifetime, make_offspring, LifetimeModel, LifetimeSpec, OffspringModel, OffspringSpec,
};
use gwlife::extinction::extinction_probability;
use gwlife::extreal::ExtReal;
use gwlife::modelspec::ModelSpec;
use gwlife::simulator::{run_trajectory, estimate_growth, SimConfig, TerminalStatus};
use gwlife::spectral::{
    classify, convergence_radius, f_eval, growth_constant, invariant_system, RecurrenceClass,
    SpectralCase,
};
use gwlife::truncation::{
    mean_total, radius_sequence, truncated_matrix, truncated_radius, RadiusMethod,
};
use std::path::PathBuf;
use std::time::Instant;

fn geo(m: f64, l: f64) -> (OffspringModel, LifetimeModel) {
    (
        make_offspring(&OffspringSpec::Geometric { mean: m }).unwrap(),
        make_lifetime(&LifetimeSpec::Geometric { mean: l }).unwrap(),
    )
}

fn report(n: u32, name: &str, result: Result<String, String>) {
    match result {
        Ok(detail) if detail.is_empty() => println!("[PASS] criterion {n}: {name}"),
        Ok(detail) => println!("[PASS] criterion {n}: {name} ({detail})"),
        Err(msg) => {
            println!("[FAIL] criterion {n}: {name} — {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($arg)+));
        }
    };
}

// Criterion 1: the geometric benchmark model (offspring mean 2, lifetime
// mean 1) has convergence norm 3/2, recovered three independent ways.
const C1_ROOT_TOL: f64 = 1e-10;
const C1_SEQUENCE_TOL: f64 = 1e-7;
const C1_TIME_LIMIT_SECS: f64 = 1.0;

#[test]
fn criterion_1_geometric_radius_three_ways() {
    report(1, "geometric benchmark radius via series root, auxiliary pgf fixed point, and truncation sequence", (|| {
        let start = Instant::now();
        let (off, life) = geo(2.0, 1.0);

        // (a) root of F(s) = 1
        let root = gwlife::rootfind::bisect(
            |s| match f_eval(&life, 2.0, s) {
                ExtReal::Finite(v) => v - 1.0,
                ExtReal::Inf => f64::INFINITY,
            },
            0.0,
            1.0,
            gwlife::rootfind::ROOT_TOL_X,
        )
        .map_err(|e| format!("series root: {e}"))?;
        let rho_a = 1.0 / root;
        ensure!((rho_a - 1.5).abs() <= C1_ROOT_TOL, "series root gives rho = {rho_a}");

        // (b) smallest fixed point of the auxiliary pgf
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        ensure!(rep.case == SpectralCase::Supercritical, "case = {:?}", rep.case);
        ensure!((rep.rho - 1.5).abs() <= C1_ROOT_TOL, "fixed point gives rho = {}", rep.rho);

        // (c) truncated radii increase to the same value
        let seq = radius_sequence(&off, &life, 200).map_err(|e| e.to_string())?;
        for pair in seq.rho_k.windows(2) {
            ensure!(pair[1] >= pair[0] - 1e-12, "sequence not nondecreasing: {} then {}", pair[0], pair[1]);
        }
        let rho_200 = *seq.rho_k.last().unwrap();
        ensure!((rho_200 - 1.5).abs() <= C1_SEQUENCE_TOL, "rho_200 = {rho_200}");

        let secs = start.elapsed().as_secs_f64();
        ensure!(secs < C1_TIME_LIMIT_SECS, "took {secs:.2} s");
        Ok(format!("rho = {rho_a:.12}, rho_200 = {rho_200:.9}, {:.0} ms", secs * 1e3))
    })());
}

// Criterion 2: normalized mean growth is exactly 1 on the constant-hazard
// benchmark, and the asymptotic growth constant agrees. The alternative
// normalization (1 + 1/m)/S is reported for comparison, not asserted: on
// this same model it equals 3 while the realized limit is 1.
const C2_GROWTH_TOL: f64 = 1e-9;
const C2_CONSTANT_TOL: f64 = 1e-10;

#[test]
fn criterion_2_growth_limit() {
    report(2, "normalized mean growth and the asymptotic growth constant", (|| {
        let (off, life) = geo(2.0, 1.0);
        let rho = 1.5_f64;
        for n in 1..=50u32 {
            let normalized = mean_total(&off, &life, n, None) / rho.powi(n as i32);
            ensure!(
                (normalized - 1.0).abs() < C2_GROWTH_TOL,
                "normalized mean at n = {n} is {normalized}"
            );
        }
        let c = growth_constant(&off, &life).map_err(|e| e.to_string())?;
        ensure!((c - 1.0).abs() <= C2_CONSTANT_TOL, "growth constant = {c}");
        let sys = invariant_system(&off, &life, 50).map_err(|e| e.to_string())?;
        Ok(format!(
            "constant = {c:.12}; alternative normalization (1 + 1/m)/S = {:?} (reported only)",
            sys.growth_constant_alt
        ))
    })());
}

// Criterion 3: the four cases of the radius characterization, each hit by a
// canonical model with a known gamma.
const C3_GAMMA_TOL: f64 = 1e-10;
const C3_RHO_TOL: f64 = 1e-9;
/// Independently derived F(R) for the boundary model (offspring mean 0.3,
/// power-law lifetime with tilt 1/2 and exponent 3).
const C3_BOUNDARY_F_AT_R: f64 = 0.742_547_335_912_939_5;

#[test]
fn criterion_3_radius_case_coverage() {
    report(3, "all four radius cases with known gamma values", (|| {
        // (i) subcritical with an interior root: gamma = 4/3
        let (off, life) = geo(0.5, 1.0);
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        ensure!(rep.case == SpectralCase::SubcriticalRoot, "(i) case = {:?}", rep.case);
        ensure!(
            (rep.gamma - 4.0 / 3.0).abs() <= C3_GAMMA_TOL,
            "(i) gamma = {}",
            rep.gamma
        );

        // (ii) subcritical boundary: gamma = R = 2 exactly, F(2) < 1
        let off = make_offspring(&OffspringSpec::Poisson { mean: 0.3 }).unwrap();
        let life = make_lifetime(&LifetimeSpec::PowerTilt { a: 0.5, b: 3.0 }).unwrap();
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        ensure!(rep.case == SpectralCase::SubcriticalBoundary, "(ii) case = {:?}", rep.case);
        ensure!(rep.gamma == 2.0, "(ii) gamma = {}", rep.gamma);
        match rep.f_at_r {
            ExtReal::Finite(v) => {
                ensure!(v < 1.0, "(ii) F(R) = {v} not below 1");
                ensure!(
                    (v - C3_BOUNDARY_F_AT_R).abs() <= 1e-12,
                    "(ii) F(R) = {v} vs derived {C3_BOUNDARY_F_AT_R}"
                );
            }
            ExtReal::Inf => return Err("(ii) F(R) infinite".into()),
        }

        // (iii) critical: offspring mean = 1 / lifetime mean
        let (off, life) = geo(1.0, 1.0);
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        ensure!(rep.case == SpectralCase::Critical, "(iii) case = {:?}", rep.case);
        ensure!((rep.rho - 1.0).abs() <= C3_RHO_TOL, "(iii) rho = {}", rep.rho);

        // (iv) supercritical
        let (off, life) = geo(2.0, 1.0);
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        ensure!(rep.case == SpectralCase::Supercritical, "(iv) case = {:?}", rep.case);
        Ok(String::new())
    })());
}

// Criterion 4: recurrence classification across six models, including the
// critical power-law lifetimes where the tail exponent decides between
// null and positive recurrence.
/// Offspring means making the power-law lifetime models exactly critical
/// (reciprocals of the lifetime means, derived independently).
const C4_CRITICAL_MEAN_B3: f64 = 0.730_762_969_401_438_5;
const C4_CRITICAL_MEAN_B4: f64 = 0.900_392_677_639_688;

#[test]
fn criterion_4_recurrence_classification() {
    report(4, "recurrence classification with evidence fields", (|| {
        // subcritical with interior root: positive recurrent
        let (off, life) = geo(0.5, 1.0);
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::PositiveRecurrent, "(i) {:?}", rec.class);
        ensure!((rec.evidence.ml - 0.5).abs() <= 1e-12, "(i) ml = {}", rec.evidence.ml);
        ensure!(
            matches!(rec.evidence.f_at_r, Some(f) if !matches!(f, ExtReal::Finite(v) if v < 1.0)),
            "(i) evidence F(R) = {:?}",
            rec.evidence.f_at_r
        );

        // subcritical boundary: transient, F(R) < 1 recorded
        let off = make_offspring(&OffspringSpec::Poisson { mean: 0.3 }).unwrap();
        let life = make_lifetime(&LifetimeSpec::PowerTilt { a: 0.5, b: 3.0 }).unwrap();
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::Transient, "(ii) {:?}", rec.class);
        ensure!(
            matches!(rec.evidence.f_at_r, Some(ExtReal::Finite(v)) if v < 1.0),
            "(ii) evidence F(R) = {:?}",
            rec.evidence.f_at_r
        );

        // critical, lifetime tail k^-3: null recurrent (infinite g''(1))
        let off = make_offspring(&OffspringSpec::Geometric { mean: C4_CRITICAL_MEAN_B3 }).unwrap();
        let life = make_lifetime(&LifetimeSpec::PowerTilt { a: 1.0, b: 3.0 }).unwrap();
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::NullRecurrent, "(iii) {:?}", rec.class);
        ensure!(
            rec.evidence.lifetime_second_factorial == Some(ExtReal::Inf),
            "(iii) evidence g''(1) = {:?}",
            rec.evidence.lifetime_second_factorial
        );

        // critical, lifetime tail k^-4: positive recurrent (finite g''(1))
        let off = make_offspring(&OffspringSpec::Geometric { mean: C4_CRITICAL_MEAN_B4 }).unwrap();
        let life = make_lifetime(&LifetimeSpec::PowerTilt { a: 1.0, b: 4.0 }).unwrap();
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::PositiveRecurrent, "(iv) {:?}", rec.class);
        ensure!(
            matches!(rec.evidence.lifetime_second_factorial, Some(ExtReal::Finite(_))),
            "(iv) evidence g''(1) = {:?}",
            rec.evidence.lifetime_second_factorial
        );

        // critical with constant hazard: positive recurrent
        let (off, life) = geo(1.0, 1.0);
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::PositiveRecurrent, "(v) {:?}", rec.class);

        // supercritical: positive recurrent
        let (off, life) = geo(2.0, 1.0);
        let rec = classify(&off, &life).map_err(|e| e.to_string())?;
        ensure!(rec.class == RecurrenceClass::PositiveRecurrent, "(vi) {:?}", rec.class);
        ensure!(rec.evidence.clause == "ml > 1", "(vi) clause = {}", rec.evidence.clause);
        Ok(String::new())
    })());
}

// Criterion 5: extinction probability for the doubling model (always two
// offspring, constant hazard 1/2) equals (sqrt(5) - 1)/2; a Monte Carlo
// run reproduces it to within a percent.
const C5_ANALYTIC_TOL: f64 = 1e-10;
const C5_MC_TOL: f64 = 0.01;
const C5_REPLICATES: u64 = 100_000;
const C5_HORIZON: u32 = 200;
const C5_CAP: u64 = 1_000_000;
const C5_SEED: u64 = 20_240_817;
const C5_TIME_LIMIT_SECS: f64 = 60.0;
const GOLDEN_Q: f64 = 0.618_033_988_749_894_9;

#[test]
fn criterion_5_extinction_analytic_and_monte_carlo() {
    report(5, "extinction probability, analytic and Monte Carlo", (|| {
        let start = Instant::now();
        let off = make_offspring(&OffspringSpec::Pmf(vec![0.0, 0.0, 1.0])).unwrap();
        let life = make_lifetime(&LifetimeSpec::Geometric { mean: 1.0 }).unwrap();
        let rep = extinction_probability(&off, &life, 1e-12);
        ensure!((rep.q - GOLDEN_Q).abs() <= C5_ANALYTIC_TOL, "analytic q = {}", rep.q);

        let cfg = SimConfig {
            replicates: C5_REPLICATES,
            max_generations: C5_HORIZON,
            master_seed: C5_SEED,
            population_cap: C5_CAP,
        };
        let summary = gwlife::simulator::estimate_extinction(&off, &life, &cfg);
        let gap = (summary.extinction_frequency - GOLDEN_Q).abs();
        ensure!(
            gap < C5_MC_TOL,
            "Monte Carlo frequency {} vs q {GOLDEN_Q}",
            summary.extinction_frequency
        );
        let secs = start.elapsed().as_secs_f64();
        ensure!(secs < C5_TIME_LIMIT_SECS, "took {secs:.1} s");
        Ok(format!(
            "q = {:.12}, MC frequency = {:.4}, {:.1} s",
            rep.q, summary.extinction_frequency, secs
        ))
    })());
}

// Criterion 6: invariant vector and measure residuals at index bound 200,
// the inner-product identity, and the derivative bound at gamma. The
// one-sided bound m g'(gamma) <= 1 does not hold on the subcritical-root
// model (the product is 1.125); it is reported, and the provable variant
// m gamma g'(sqrt(gamma)) <= 1 is asserted instead.
const C6_K: usize = 200;
const C6_U_RESIDUAL_TOL: f64 = 1e-10;
const C6_V_RESIDUAL_TOL: f64 = 1e-10;
const C6_VU_TOL: f64 = 1e-8;
const C6_DERIVATIVE_SLACK: f64 = 1e-10;

#[test]
fn criterion_6_invariant_system_residuals() {
    report(6, "invariant system residuals and derivative bound", (|| {
        for m in [1.0, 2.0] {
            let (off, life) = geo(m, 1.0);
            let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
            let gamma = rep.gamma;
            let sys = invariant_system(&off, &life, C6_K).map_err(|e| e.to_string())?;
            let mat = truncated_matrix(&off, &life, C6_K).map_err(|e| e.to_string())?;

            // gamma * M u = u, rows 1..K-1 (row K needs u_{K+1})
            let mu = mat.apply(&sys.u);
            for (i, (&mui, &ui)) in mu.iter().zip(&sys.u).take(C6_K - 1).enumerate() {
                let resid = (gamma * mui - ui).abs();
                ensure!(
                    resid <= C6_U_RESIDUAL_TOL * ui.abs(),
                    "m = {m}: vector residual {resid:.3e} at row {}",
                    i + 1
                );
            }
            // gamma * v M = v, all columns (the column-1 tail beyond K is
            // below resolution for these models)
            let vm = mat.apply_left(&sys.v);
            for (j, (&vmj, &vj)) in vm.iter().zip(&sys.v).enumerate() {
                let resid = (gamma * vmj - vj).abs();
                ensure!(
                    resid <= C6_V_RESIDUAL_TOL * vj.abs(),
                    "m = {m}: measure residual {resid:.3e} at column {}",
                    j + 1
                );
            }
            match (sys.vu, sys.s_sum) {
                (ExtReal::Finite(vu), ExtReal::Finite(s)) => {
                    ensure!(
                        (vu - (1.0 + s)).abs() <= C6_VU_TOL,
                        "m = {m}: vu = {vu} vs 1 + S = {}",
                        1.0 + s
                    );
                }
                other => return Err(format!("m = {m}: non-finite sums {other:?}")),
            }
        }

        // derivative bound on the subcritical-root model
        let (off, life) = geo(0.5, 1.0);
        let rep = convergence_radius(&off, &life, 1e-12).map_err(|e| e.to_string())?;
        let m = off.mean();
        let gamma = rep.gamma;
        let reported = match life.pgf_eval(gamma, 1) {
            ExtReal::Finite(d) => m * d,
            ExtReal::Inf => return Err("g'(gamma) infinite".into()),
        };
        let bounded = match life.pgf_eval(gamma.sqrt(), 1) {
            ExtReal::Finite(d) => m * gamma * d,
            ExtReal::Inf => return Err("g'(sqrt(gamma)) infinite".into()),
        };
        ensure!(
            bounded <= 1.0 + C6_DERIVATIVE_SLACK,
            "m gamma g'(sqrt(gamma)) = {bounded}"
        );
        Ok(format!(
            "m g'(gamma) = {reported:.4} (reported), m gamma g'(sqrt(gamma)) = {bounded:.4} <= 1"
        ))
    })());
}

// Criterion 7: Monte Carlo per-age means at generation 10 of the critical
// constant-hazard model match the exact first row of the 10th power of the
// 11x11 truncated mean matrix, within 4 standard errors; and rerunning
// with the same seed is byte-identical.
const C7_REPLICATES: u64 = 100_000;
const C7_GENERATION: u32 = 10;
const C7_SEED: u64 = 991;
const C7_SE_MULTIPLE: f64 = 4.0;

#[test]
fn criterion_7_simulator_mean_level_oracle() {
    report(7, "simulator per-age means against the exact mean matrix power", (|| {
        let (off, life) = geo(1.0, 1.0);
        let k = C7_GENERATION as usize + 1;

        // exact: first row of the n-th matrix power (exact because age
        // n + 1 is unreachable in n seasons)
        let mat = truncated_matrix(&off, &life, k).map_err(|e| e.to_string())?;
        let mut row = vec![0.0; k];
        row[0] = 1.0;
        for _ in 0..C7_GENERATION {
            row = mat.apply_left(&row);
        }

        // Monte Carlo accumulation with per-age second moments
        let cfg = SimConfig {
            replicates: C7_REPLICATES,
            max_generations: C7_GENERATION,
            master_seed: C7_SEED,
            population_cap: 1_000_000,
        };
        let mut sums = vec![0.0_f64; k];
        let mut sq_sums = vec![0.0_f64; k];
        for replicate in 0..C7_REPLICATES {
            let traj = run_trajectory(&off, &life, &cfg, replicate);
            if matches!(traj.status, TerminalStatus::Capped(_)) {
                return Err(format!("replicate {replicate} hit the population cap"));
            }
            let last = traj.counts.last().unwrap();
            let extinct = matches!(traj.status, TerminalStatus::Extinct(_));
            for age in 0..k {
                let c = if extinct { 0 } else { last.get(age).copied().unwrap_or(0) };
                sums[age] += c as f64;
                sq_sums[age] += (c * c) as f64;
            }
        }
        let r = C7_REPLICATES as f64;
        let mut worst = 0.0_f64;
        for age in 0..k {
            let mean = sums[age] / r;
            let var = (sq_sums[age] / r - mean * mean).max(0.0);
            let se = (var / r).sqrt();
            let gap = (mean - row[age]).abs();
            ensure!(
                gap <= C7_SE_MULTIPLE * se.max(1e-12),
                "age {age}: MC mean {mean} vs exact {} (se {se:.2e})",
                row[age]
            );
            if se > 0.0 {
                worst = worst.max(gap / se);
            }
        }

        // determinism: identical bytes on a rerun with the same seed
        let a = estimate_growth(&off, &life, &cfg, &[C7_GENERATION]);
        let b = estimate_growth(&off, &life, &cfg, &[C7_GENERATION]);
        let a_text = serde_json::to_string(&a).unwrap();
        let b_text = serde_json::to_string(&b).unwrap();
        ensure!(a_text == b_text, "same-seed reruns differ");
        Ok(format!("worst deviation {worst:.2} standard errors"))
    })());
}

// Criterion 8: the scalar-root and power-iteration radii agree on every
// truncation up to 400 for every bundled model spec.
const C8_K_MAX: usize = 400;
const C8_AGREEMENT_TOL: f64 = 1e-9;

#[test]
fn criterion_8_two_method_truncation_agreement() {
    report(8, "scalar-root vs power-iteration agreement to k = 400", (|| {
        let mut dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
        dir.pop();
        dir.pop();
        dir.push("specs");
        let mut specs: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| format!("reading {}: {e}", dir.display()))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        specs.sort();
        ensure!(!specs.is_empty(), "no model specs found in {}", dir.display());
        let mut worst = 0.0_f64;
        for path in &specs {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let (off, life) = ModelSpec::from_json(&text)
                .and_then(|s| s.build())
                .map_err(|e| format!("{}: {e}", path.display()))?;
            for k in 1..=C8_K_MAX {
                let a = truncated_radius(&off, &life, k, RadiusMethod::ScalarRoot)
                    .map_err(|e| format!("{} k = {k}: {e}", path.display()))?;
                let b = truncated_radius(&off, &life, k, RadiusMethod::PowerIteration)
                    .map_err(|e| format!("{} k = {k}: {e}", path.display()))?;
                let gap = (a - b).abs();
                ensure!(
                    gap <= C8_AGREEMENT_TOL,
                    "{} k = {k}: scalar {a} vs power {b}",
                    path.display()
                );
                worst = worst.max(gap);
            }
        }
        Ok(format!("{} specs, worst gap {worst:.2e}", specs.len()))
    })());
}
