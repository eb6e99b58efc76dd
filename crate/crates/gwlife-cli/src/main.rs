//! Command-line front end: reads a model spec, runs the requested analysis,
//! writes a JSON or CSV report.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid spec or flags,
//! 3 indeterminate criticality, 4 population cap hit in over 99% of
//! replicates.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use gwlife::distributions::{LifetimeModel, OffspringModel};
use gwlife::extinction::{extinction_probability, is_certain_extinction};
use gwlife::modelspec::ModelSpec;
use gwlife::simulator::{estimate_extinction, estimate_growth, run_trajectory, SimConfig};
use gwlife::spectral::{
    classify, convergence_radius, invariant_system, SpectralCase, SpectralError,
};
use gwlife::truncation::{mean_total, truncated_radius, RadiusMethod};
use gwlife::ExtReal;

const EXIT_VALIDATION: u8 = 1;
const EXIT_SPEC: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_CAP: u8 = 4;

#[derive(Parser)]
#[command(name = "gwlife", version, about = "Analyze Galton-Watson processes with random lifetimes")]
struct Cli {
    /// Path to the model-spec JSON file.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root-finding tolerance, in (0, 1e-6].
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence norm, classification, extinction, and invariant system.
    Analyze {
        /// Truncation index for the reported invariant vectors.
        #[arg(long, default_value_t = 50)]
        k: usize,
    },
    /// Spectral radii of growing truncations, as CSV.
    Truncate {
        #[arg(long, default_value_t = 50)]
        k_max: usize,
    },
    /// Extinction probability report.
    Extinction,
    /// Monte Carlo simulation.
    Simulate(SimArgs),
    /// Cross-check battery over all analysis paths.
    Validate,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    replicates: u64,
    #[arg(long, default_value_t = 100)]
    horizon: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// Census generations for growth estimates (extinction-only when empty).
    #[arg(long, value_delimiter = ',')]
    generations: Vec<u32>,
    /// Write the first replicate's trajectory as CSV to this path.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
}

struct Fail {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Fail {
    Fail {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    let result = run(&cli);
    match result {
        Ok(()) => {
            eprintln!("completed in {:.3}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_models(cli: &Cli) -> Result<(ModelSpec, OffspringModel, LifetimeModel), Fail> {
    let path = cli
        .spec
        .as_ref()
        .ok_or_else(|| fail(EXIT_SPEC, "--spec is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_SPEC, format!("cannot read {}: {e}", path.display())))?;
    let spec = ModelSpec::from_json(&text).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let (off, life) = spec.build().map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    Ok((spec, off, life))
}

fn check_tol(tol: f64) -> Result<(), Fail> {
    if tol > 0.0 && tol <= 1e-6 {
        Ok(())
    } else {
        Err(fail(EXIT_SPEC, format!("--tol must lie in (0, 1e-6], got {tol}")))
    }
}

fn manifest(cli: &Cli, command: &str, params: Value) -> Value {
    json!({
        "command": command,
        "spec_path": cli.spec.as_ref().map(|p| p.display().to_string()),
        "out_path": cli.out.as_ref().map(|p| p.display().to_string()),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "parameters": params,
    })
}

fn emit(cli: &Cli, text: &str) -> Result<(), Fail> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| fail(EXIT_SPEC, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| fail(EXIT_SPEC, e.to_string()))
        }
    }
}

fn emit_json(cli: &Cli, doc: &Value) -> Result<(), Fail> {
    emit(cli, &serde_json::to_string_pretty(doc).expect("serializable"))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn run(cli: &Cli) -> Result<(), Fail> {
    check_tol(cli.tol)?;
    match &cli.command {
        Command::Analyze { k } => cmd_analyze(cli, *k),
        Command::Truncate { k_max } => cmd_truncate(cli, *k_max),
        Command::Extinction => cmd_extinction(cli),
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Validate => cmd_validate(cli),
    }
}

fn spectral_fail(e: SpectralError) -> Fail {
    match e {
        SpectralError::IndeterminateCriticality { .. } => fail(EXIT_INDETERMINATE, e.to_string()),
        other => fail(EXIT_SPEC, other.to_string()),
    }
}

fn cmd_analyze(cli: &Cli, k: usize) -> Result<(), Fail> {
    let (spec, off, life) = load_models(cli)?;
    let spectral = convergence_radius(&off, &life, cli.tol).map_err(spectral_fail)?;
    let recurrence = classify(&off, &life).map_err(spectral_fail)?;
    let ext = extinction_probability(&off, &life, cli.tol.min(1e-8));
    let (invariants, absent_reason) = match build_invariants(&off, &life, k) {
        Ok(result) => result,
        Err(e) => return Err(spectral_fail(e)),
    };
    let doc = json!({
        "manifest": manifest(cli, "analyze", json!({"k": k, "tol": cli.tol})),
        "model": to_value(&spec),
        "spectral": to_value(&spectral),
        "recurrence": to_value(&recurrence),
        "extinction": to_value(&ext),
        "invariant_system": invariants.as_ref().map(to_value),
        "invariant_system_absent_reason": absent_reason,
    });
    emit_json(cli, &doc)
}

type Invariants = (Option<gwlife::spectral::InvariantSystem>, Option<String>);

/// Invariant system with `k` clamped to the lifetime support (indices past
/// the maximum attainable age have no invariant components).
fn build_invariants(
    off: &OffspringModel,
    life: &LifetimeModel,
    k: usize,
) -> Result<Invariants, SpectralError> {
    let k_use = match life.max_age() {
        Some(a) => k.min(a as usize + 1),
        None => k,
    };
    if k_use < 2 {
        return Ok((
            None,
            Some("lifetime support too short for an index range".to_string()),
        ));
    }
    match invariant_system(off, life, k_use) {
        Ok(sys) => Ok((Some(sys), None)),
        Err(SpectralError::NoInvariantSystem) => {
            Ok((None, Some("boundary case: F(s) = 1 has no root".to_string())))
        }
        Err(e) => Err(e),
    }
}

fn cmd_truncate(cli: &Cli, k_max: usize) -> Result<(), Fail> {
    if !(1..=10_000).contains(&k_max) {
        return Err(fail(EXIT_SPEC, format!("--k-max must lie in [1, 10000], got {k_max}")));
    }
    let (_, off, life) = load_models(cli)?;
    let mut csv = String::from("k,rho_k,method\n");
    for k in 1..=k_max {
        let scalar = truncated_radius(&off, &life, k, RadiusMethod::ScalarRoot)
            .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        csv.push_str(&format!("{k},{scalar},scalar_root\n"));
        let power = truncated_radius(&off, &life, k, RadiusMethod::PowerIteration)
            .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        csv.push_str(&format!("{k},{power},power_iteration\n"));
    }
    match convergence_radius(&off, &life, cli.tol) {
        Ok(report) => csv.push_str(&format!(",{},analytic\n", report.rho)),
        Err(e) => return Err(spectral_fail(e)),
    }
    emit(cli, csv.trim_end_matches('\n'))
}

fn cmd_extinction(cli: &Cli) -> Result<(), Fail> {
    let (spec, off, life) = load_models(cli)?;
    let ext = extinction_probability(&off, &life, cli.tol.min(1e-8));
    let doc = json!({
        "manifest": manifest(cli, "extinction", json!({"tol": cli.tol})),
        "model": to_value(&spec),
        "extinction": to_value(&ext),
    });
    emit_json(cli, &doc)
}

fn cmd_simulate(cli: &Cli, args: &SimArgs) -> Result<(), Fail> {
    let (spec, off, life) = load_models(cli)?;
    let cfg = SimConfig {
        replicates: args.replicates,
        max_generations: args.horizon,
        master_seed: args.seed,
        population_cap: args.cap,
    };
    cfg.validate().map_err(|e| fail(EXIT_SPEC, e))?;
    let summary = if args.generations.is_empty() {
        estimate_extinction(&off, &life, &cfg)
    } else {
        estimate_growth(&off, &life, &cfg, &args.generations)
    };
    if let Some(path) = &args.trajectory_out {
        let traj = run_trajectory(&off, &life, &cfg, 0);
        std::fs::write(path, gwlife::simulator::trajectory_csv(&traj))
            .map_err(|e| fail(EXIT_SPEC, format!("cannot write {}: {e}", path.display())))?;
    }
    let doc = json!({
        "manifest": manifest(cli, "simulate", json!({
            "replicates": args.replicates,
            "horizon": args.horizon,
            "seed": args.seed,
            "cap": args.cap,
            "generations": args.generations,
        })),
        "model": to_value(&spec),
        "summary": to_value(&summary),
    });
    emit_json(cli, &doc)?;
    if summary.capped as f64 > 0.99 * args.replicates as f64 {
        return Err(fail(
            EXIT_CAP,
            format!(
                "population cap hit in {} of {} replicates; diagnostics unusable",
                summary.capped, args.replicates
            ),
        ));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    status: &'static str, // "pass" | "fail" | "skipped"
    residual: Option<f64>,
    detail: String,
}

impl Check {
    fn gate(name: &'static str, residual: f64, tol: f64) -> Check {
        Check {
            name,
            status: if residual.is_finite() && residual <= tol {
                "pass"
            } else {
                "fail"
            },
            residual: Some(residual),
            detail: format!("tolerance {tol:e}"),
        }
    }

    fn skipped(name: &'static str, reason: impl Into<String>) -> Check {
        Check {
            name,
            status: "skipped",
            residual: None,
            detail: reason.into(),
        }
    }
}

fn cmd_validate(cli: &Cli) -> Result<(), Fail> {
    let (spec, off, life) = load_models(cli)?;
    let mut checks: Vec<Check> = Vec::new();
    let report = convergence_radius(&off, &life, cli.tol).map_err(spectral_fail)?;
    let m = off.mean();

    // the two radius characterizations agree
    if report.case == SpectralCase::Supercritical || report.case == SpectralCase::SubcriticalRoot
    {
        checks.push(Check::gate("root_equation_residual", report.root_residual, 1e-9));
        let f_at_root = gwlife::spectral::f_eval(&life, m, report.gamma);
        match f_at_root {
            ExtReal::Finite(v) => {
                checks.push(Check::gate("f_at_gamma_vs_one", (v - 1.0).abs(), 1e-8))
            }
            ExtReal::Inf => checks.push(Check {
                name: "f_at_gamma_vs_one",
                status: "fail",
                residual: None,
                detail: "F diverges at the reported root".into(),
            }),
        }
    } else {
        checks.push(Check::skipped("f_at_gamma_vs_one", "no root in this case"));
    }

    // two-method truncation agreement
    let mut max_diff = 0.0_f64;
    for k in [1usize, 2, 5, 25, 100] {
        let a = truncated_radius(&off, &life, k, RadiusMethod::ScalarRoot)
            .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        let b = truncated_radius(&off, &life, k, RadiusMethod::PowerIteration)
            .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        max_diff = max_diff.max((a - b).abs());
    }
    checks.push(Check::gate("truncation_method_agreement", max_diff, 1e-9));

    // invariant residuals and vu vs 1 + S
    match build_invariants(&off, &life, 100).map_err(spectral_fail)? {
        (Some(sys), _) => {
            let gamma = report.gamma;
            let mut u_res = 0.0_f64;
            let mut v_res = 0.0_f64;
            for k in 2..sys.k - 1 {
                let q = life.hazard(k as u64);
                let lhs = gamma * (m * q * sys.u[0] + q * sys.u[k]);
                if sys.u[k - 1] > 0.0 {
                    u_res = u_res.max((lhs - sys.u[k - 1]).abs() / sys.u[k - 1]);
                }
                let vl = gamma * sys.v[k - 2] * life.hazard(k as u64 - 1);
                if sys.v[k - 1] > 0.0 {
                    v_res = v_res.max((vl - sys.v[k - 1]).abs() / sys.v[k - 1]);
                }
            }
            checks.push(Check::gate("invariant_vector_residual", u_res, 1e-10));
            checks.push(Check::gate("invariant_measure_residual", v_res, 1e-12));
            match (sys.vu, sys.s_sum) {
                (ExtReal::Finite(vu), ExtReal::Finite(s)) => {
                    checks.push(Check::gate("vu_vs_one_plus_s", (vu - (1.0 + s)).abs(), 1e-8));
                }
                _ => checks.push(Check::skipped("vu_vs_one_plus_s", "S infinite")),
            }
        }
        (None, reason) => {
            let reason = reason.unwrap_or_default();
            checks.push(Check::skipped("invariant_vector_residual", reason.clone()));
            checks.push(Check::skipped("invariant_measure_residual", reason.clone()));
            checks.push(Check::skipped("vu_vs_one_plus_s", reason));
        }
    }

    // layered-sum bound at a subcritical root: m γ g'(√γ) <= 1 follows from
    // F(γ) = 1 by AM-GM on the inner sum
    if report.case == SpectralCase::SubcriticalRoot {
        match life.pgf_eval(report.gamma.sqrt(), 1) {
            ExtReal::Finite(g1) => {
                let value = m * report.gamma * g1;
                checks.push(Check::gate("layered_sum_bound", (value - 1.0).max(0.0), 1e-10));
            }
            ExtReal::Inf => checks.push(Check::skipped("layered_sum_bound", "g' diverges at sqrt(gamma)")),
        }
    } else {
        checks.push(Check::skipped("layered_sum_bound", "applies to the subcritical root case only"));
    }

    // extinction consistency: ml > 1 iff rho > 1 iff q < 1
    let ext = extinction_probability(&off, &life, cli.tol.min(1e-8));
    let super_by_ml = !is_certain_extinction(&off, &life);
    let consistent = (ext.q < 1.0) == super_by_ml && (report.rho > 1.0) == super_by_ml;
    checks.push(Check {
        name: "extinction_consistency",
        status: if consistent { "pass" } else { "fail" },
        residual: None,
        detail: format!("q = {}, rho = {}", ext.q, report.rho),
    });

    // simulator means vs exact matrix powers at small n
    let cfg = SimConfig {
        replicates: 20_000,
        max_generations: 6,
        master_seed: 1,
        population_cap: 1_000_000,
    };
    let summary = estimate_growth(&off, &life, &cfg, &[6]);
    let mut worst = 0.0_f64;
    let n = 6u32;
    for t in 0..(n as usize + 1) {
        let mut w = vec![0.0; n as usize + 1];
        w[t] = 1.0;
        let exact = mean_total(&off, &life, n, Some(&w));
        let mc = summary.mean_per_type[0].get(t).copied().unwrap_or(0.0);
        // branching variance exceeds the Poisson proxy; scale by horizon
        let se = (exact.max(1e-3) * (1.0 + n as f64) / cfg.replicates as f64).sqrt();
        worst = worst.max((mc - exact).abs() / (6.0 * se).max(0.03 * exact).max(0.01));
    }
    checks.push(Check::gate("simulator_mean_vs_matrix_power", worst, 1.0));

    let passed = checks.iter().all(|c| c.status != "fail");
    let doc = json!({
        "manifest": manifest(cli, "validate", json!({"tol": cli.tol})),
        "model": to_value(&spec),
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "status": c.status,
            "residual": c.residual,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "passed": passed,
    });
    emit_json(cli, &doc)?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| c.status == "fail")
            .map(|c| c.name)
            .collect();
        Err(fail(EXIT_VALIDATION, format!("checks failed: {}", failed.join(", "))))
    }
}
