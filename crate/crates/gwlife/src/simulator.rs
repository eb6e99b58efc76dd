//! Seeded Monte Carlo simulation of the age-typed process.
//!
//! One season: each age-`a` cohort of size `N` keeps `Binomial(N, q_{a+1})`
//! survivors, who advance to age `a+1` and contribute offspring to age 0;
//! non-survivors leave nothing. Every cohort draw comes from its own RNG
//! stream keyed by `(master_seed, replicate, generation, age)`, so
//! trajectories are bit-identical regardless of execution order or
//! parallelism.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{LifetimeModel, OffspringModel};
use crate::spectral::convergence_radius;

/// Replicates per parallel work unit; fixed so aggregation order (and hence
/// every report byte) is independent of the thread count.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub replicates: u64,
    pub max_generations: u32,
    pub master_seed: u64,
    /// Total population at which a replicate is abandoned and counted as
    /// survived.
    pub population_cap: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.replicates < 1 {
            return Err("replicates must be at least 1".into());
        }
        if self.max_generations < 1 {
            return Err("max_generations must be at least 1".into());
        }
        if self.population_cap == 0 {
            return Err("population_cap must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    /// All-zero state first reached at this generation.
    Extinct(u32),
    /// Population cap exceeded at this generation; counted as survived.
    Capped(u32),
    /// Still alive at the horizon.
    RanOut,
}

/// One replicate's history: `counts[n][a]` is the number of age-`a`
/// individuals at generation `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub counts: Vec<Vec<u64>>,
    pub totals: Vec<u64>,
    pub status: TerminalStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub replicates: u64,
    pub extinction_frequency: f64,
    /// 95% normal-approximation half-width for the extinction frequency.
    pub ci_half_width: f64,
    pub capped: u64,
    /// Requested census generations (empty for pure extinction runs).
    pub generations: Vec<u32>,
    pub mean_totals: Vec<f64>,
    /// `ρ^{-n} ·` mean total at each requested generation.
    pub normalized_growth: Vec<f64>,
    /// Standard error of the mean total at each requested generation.
    pub total_std_err: Vec<f64>,
    /// Mean age-count vector at each requested generation.
    pub mean_per_type: Vec<Vec<f64>>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fresh stream for one cohort draw.
fn cohort_rng(master_seed: u64, replicate: u64, generation: u32, age: u64) -> SmallRng {
    let key = mix(mix(mix(mix(master_seed) ^ replicate) ^ generation as u64) ^ age);
    SmallRng::seed_from_u64(key)
}

/// Advance the age-count vector one season.
pub fn step(
    off: &OffspringModel,
    life: &LifetimeModel,
    state: &[u64],
    master_seed: u64,
    replicate: u64,
    generation: u32,
) -> Vec<u64> {
    let mut next = vec![0u64; state.len() + 1];
    for (age, &n) in state.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let hazard = life.hazard(age as u64 + 1);
        let mut rng = cohort_rng(master_seed, replicate, generation, age as u64);
        let survivors = if hazard <= 0.0 {
            0
        } else if hazard >= 1.0 {
            n
        } else {
            Binomial::new(n, hazard).unwrap().sample(&mut rng)
        };
        if survivors == 0 {
            continue;
        }
        next[age + 1] = survivors;
        next[0] += off.sample_sum(&mut rng, survivors);
    }
    while next.len() > 1 && *next.last().unwrap() == 0 {
        next.pop();
    }
    next
}

/// Run one replicate from a single newborn.
pub fn run_trajectory(
    off: &OffspringModel,
    life: &LifetimeModel,
    cfg: &SimConfig,
    replicate: u64,
) -> Trajectory {
    let mut counts = Vec::with_capacity(cfg.max_generations as usize + 1);
    let mut totals = Vec::with_capacity(cfg.max_generations as usize + 1);
    let mut state = vec![1u64];
    counts.push(state.clone());
    totals.push(1);
    let mut status = TerminalStatus::RanOut;
    for generation in 0..cfg.max_generations {
        state = step(off, life, &state, cfg.master_seed, replicate, generation);
        let total: u64 = state.iter().sum();
        counts.push(state.clone());
        totals.push(total);
        if total == 0 {
            status = TerminalStatus::Extinct(generation + 1);
            break;
        }
        if total > cfg.population_cap {
            status = TerminalStatus::Capped(generation + 1);
            break;
        }
    }
    Trajectory {
        counts,
        totals,
        status,
    }
}

/// Integer partial aggregate for one chunk of replicates; merging is exact,
/// so results do not depend on chunk scheduling.
#[derive(Clone)]
struct Partial {
    extinct: u64,
    capped: u64,
    sum_total: Vec<u128>,
    sum_total_sq: Vec<u128>,
    sum_per_type: Vec<Vec<u128>>,
}

impl Partial {
    fn new(gens: &[u32]) -> Self {
        Partial {
            extinct: 0,
            capped: 0,
            sum_total: vec![0; gens.len()],
            sum_total_sq: vec![0; gens.len()],
            sum_per_type: gens.iter().map(|&n| vec![0; n as usize + 1]).collect(),
        }
    }

    fn absorb(&mut self, traj: &Trajectory, gens: &[u32]) {
        match traj.status {
            TerminalStatus::Extinct(_) => self.extinct += 1,
            TerminalStatus::Capped(_) => self.capped += 1,
            TerminalStatus::RanOut => {}
        }
        for (gi, &n) in gens.iter().enumerate() {
            // extinct replicates contribute zero beyond their last record;
            // capped ones carry their last census forward (documented bias)
            let idx = (n as usize).min(traj.totals.len() - 1);
            let beyond_record = (n as usize) >= traj.totals.len();
            let extinct_by_then =
                matches!(traj.status, TerminalStatus::Extinct(_)) && beyond_record;
            let total = if extinct_by_then {
                0
            } else {
                traj.totals[idx]
            };
            self.sum_total[gi] += total as u128;
            self.sum_total_sq[gi] += (total as u128) * (total as u128);
            if !extinct_by_then {
                for (a, &c) in traj.counts[idx].iter().enumerate() {
                    if a < self.sum_per_type[gi].len() {
                        self.sum_per_type[gi][a] += c as u128;
                    }
                }
            }
        }
    }

    fn merge(&mut self, other: &Partial) {
        self.extinct += other.extinct;
        self.capped += other.capped;
        for i in 0..self.sum_total.len() {
            self.sum_total[i] += other.sum_total[i];
            self.sum_total_sq[i] += other.sum_total_sq[i];
            for (a, v) in other.sum_per_type[i].iter().enumerate() {
                self.sum_per_type[i][a] += v;
            }
        }
    }
}

fn simulate(
    off: &OffspringModel,
    life: &LifetimeModel,
    cfg: &SimConfig,
    gens: &[u32],
    rho: Option<f64>,
) -> SimulationSummary {
    cfg.validate().expect("invalid simulation config");
    let chunks: Vec<u64> = (0..cfg.replicates.div_ceil(CHUNK)).collect();
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.replicates);
            let mut part = Partial::new(gens);
            for replicate in lo..hi {
                let traj = run_trajectory(off, life, cfg, replicate);
                part.absorb(&traj, gens);
            }
            part
        })
        .collect();
    let mut agg = Partial::new(gens);
    for p in &partials {
        agg.merge(p);
    }

    let r = cfg.replicates as f64;
    let p_hat = agg.extinct as f64 / r;
    let mut mean_totals = Vec::new();
    let mut normalized_growth = Vec::new();
    let mut total_std_err = Vec::new();
    let mut mean_per_type = Vec::new();
    for (gi, &n) in gens.iter().enumerate() {
        let mean = agg.sum_total[gi] as f64 / r;
        let var = (agg.sum_total_sq[gi] as f64 / r - mean * mean).max(0.0);
        mean_totals.push(mean);
        total_std_err.push((var / r).sqrt());
        normalized_growth.push(match rho {
            Some(rho) => mean / rho.powi(n as i32),
            None => f64::NAN,
        });
        mean_per_type.push(
            agg.sum_per_type[gi]
                .iter()
                .map(|&v| v as f64 / r)
                .collect(),
        );
    }
    SimulationSummary {
        replicates: cfg.replicates,
        extinction_frequency: p_hat,
        ci_half_width: 1.96 * (p_hat * (1.0 - p_hat) / r).sqrt(),
        capped: agg.capped,
        generations: gens.to_vec(),
        mean_totals,
        normalized_growth,
        total_std_err,
        mean_per_type,
    }
}

/// Fraction of replicates extinct by the horizon (capped replicates count
/// as survived; the finite horizon under-counts extinction).
pub fn estimate_extinction(
    off: &OffspringModel,
    life: &LifetimeModel,
    cfg: &SimConfig,
) -> SimulationSummary {
    simulate(off, life, cfg, &[], None)
}

/// Mean totals, per-type means, and `ρ^{-n}`-normalized growth at the
/// requested generations.
pub fn estimate_growth(
    off: &OffspringModel,
    life: &LifetimeModel,
    cfg: &SimConfig,
    generations: &[u32],
) -> SimulationSummary {
    let rho = convergence_radius(off, life, 1e-12)
        .map(|rep| rep.rho)
        .ok();
    simulate(off, life, cfg, generations, rho)
}

/// `generation,age,count` rows for one trajectory.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("generation,age,count\n");
    for (n, state) in traj.counts.iter().enumerate() {
        for (age, &c) in state.iter().enumerate() {
            if c > 0 {
                out.push_str(&format!("{n},{age},{c}\n"));
            }
        }
    }
    out
}
