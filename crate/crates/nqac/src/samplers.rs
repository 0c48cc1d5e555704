//! Sampling backends: exact Gibbs, Metropolis MCMC, and a quasi-static
//! annealer-device model with per-programming control noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::chimera::PhysicalProblem;
use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SpinConfig, DEFAULT_GIBBS_CAP};
use crate::reads::{Provenance, ReadSet};
use crate::seeds::{child_seed, tag};

/// Content hash of a problem, used for provenance.
pub fn problem_hash(problem: &IsingProblem) -> String {
    let mut hasher = Sha256::new();
    hasher.update(problem.n_spins().to_le_bytes());
    for &(i, j, v) in problem.edges() {
        hasher.update(i.to_le_bytes());
        hasher.update(j.to_le_bytes());
        hasher.update(v.to_le_bytes());
    }
    for &(i, v) in problem.fields() {
        hasher.update(i.to_le_bytes());
        hasher.update(v.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

/// The annealer model: a Gibbs sampler at `beta_eff = beta_phys *
/// freeze_fraction`, with i.i.d. Gaussian misprogramming of every field and
/// coupling once per programming cycle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DeviceModel {
    pub beta_phys: f64,
    /// `B(t*)/B(t_f)`, the freezing-point fraction of the final energy scale.
    pub freeze_fraction: f64,
    /// Std-dev of the Gaussian perturbation on every programmed h and J.
    pub control_noise_sigma: f64,
    pub reads_per_cycle: usize,
    /// Problems at or below this many spins use the exact Gibbs backend.
    pub exact_backend_cap: usize,
    /// MCMC schedule for larger problems, as (fraction of beta_eff, sweeps).
    pub mcmc_schedule: Vec<(f64, usize)>,
}

impl Default for DeviceModel {
    fn default() -> Self {
        DeviceModel {
            beta_phys: 1.0,
            freeze_fraction: 1.0,
            control_noise_sigma: 0.03,
            reads_per_cycle: 1000,
            exact_backend_cap: 20,
            mcmc_schedule: vec![(0.25, 16), (0.5, 16), (1.0, 32)],
        }
    }
}

impl DeviceModel {
    pub fn beta_eff(&self) -> f64 {
        self.beta_phys * self.freeze_fraction
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_phys <= 0.0 {
            return Err(Error::Input(format!("beta_phys must be > 0, got {}", self.beta_phys)));
        }
        if !(self.freeze_fraction > 0.0 && self.freeze_fraction <= 1.0) {
            return Err(Error::Input(format!(
                "freeze_fraction must be in (0,1], got {}",
                self.freeze_fraction
            )));
        }
        if self.control_noise_sigma < 0.0 {
            return Err(Error::Input("control noise sigma must be >= 0".into()));
        }
        if self.reads_per_cycle == 0 {
            return Err(Error::Input("reads_per_cycle must be >= 1".into()));
        }
        if self.mcmc_schedule.is_empty() {
            return Err(Error::Input("mcmc schedule must be nonempty".into()));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        format!(
            "device(beta_phys={},freeze={},sigma={})",
            self.beta_phys, self.freeze_fraction, self.control_noise_sigma
        )
    }
}

/// I.i.d. draws from the exact Gibbs distribution.
pub fn sample_exact(problem: &IsingProblem, beta: f64, n_reads: usize, seed: u64) -> Result<ReadSet> {
    sample_exact_with_cap(problem, beta, n_reads, seed, DEFAULT_GIBBS_CAP)
}

pub fn sample_exact_with_cap(
    problem: &IsingProblem,
    beta: f64,
    n_reads: usize,
    seed: u64,
    cap: usize,
) -> Result<ReadSet> {
    let dist = problem.gibbs_distribution_with_cap(beta, cap)?;
    let mut cumulative = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for &p in &dist.probs {
        acc += p;
        cumulative.push(acc);
    }
    let n = problem.n_spins();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = (0..n_reads)
        .map(|_| {
            let u: f64 = rng.gen();
            let idx = cumulative.partition_point(|&c| c < u).min(cumulative.len() - 1);
            SpinConfig::from_index(idx, n)
        })
        .collect();
    ReadSet::new(
        configs,
        Provenance {
            problem_hash: problem_hash(problem),
            sampler: "exact".into(),
            seed,
            beta: Some(beta),
            ..Default::default()
        },
    )
}

struct Couplings {
    fields: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Couplings {
    fn build(problem: &IsingProblem) -> Couplings {
        let n = problem.n_spins();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j, v) in problem.edges() {
            neighbors[i].push((j, v));
            neighbors[j].push((i, v));
        }
        Couplings {
            fields: problem.dense_fields(),
            neighbors,
        }
    }

    /// Energy change of flipping spin `i`.
    #[inline]
    fn flip_delta(&self, z: &[i8], i: usize) -> f64 {
        let mut local = self.fields[i];
        for &(j, v) in &self.neighbors[i] {
            local += v * z[j] as f64;
        }
        -2.0 * z[i] as f64 * local
    }
}

/// Single-spin-flip Metropolis with independent restarts per read.
///
/// Each read starts from a random configuration and runs the whole
/// `(beta, sweeps)` schedule in order; the final beta is the sampling target.
/// Reads are partitioned over workers; each read derives its own stream from
/// `(seed, read index)`, so output is seed-deterministic regardless of the
/// worker count.
pub fn sample_mcmc(
    problem: &IsingProblem,
    schedule: &[(f64, usize)],
    n_reads: usize,
    seed: u64,
) -> Result<ReadSet> {
    if schedule.is_empty() {
        return Err(Error::Input("MCMC schedule must be nonempty".into()));
    }
    for &(beta, _) in schedule {
        if beta < 0.0 {
            return Err(Error::Input("MCMC beta must be >= 0".into()));
        }
    }
    let couplings = Couplings::build(problem);
    let n = problem.n_spins();
    let configs: Vec<SpinConfig> = (0..n_reads)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, &[tag::READ, r as u64]));
            let mut z: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            for &(beta, sweeps) in schedule {
                for _ in 0..sweeps {
                    for i in 0..n {
                        let delta = couplings.flip_delta(&z, i);
                        if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                            z[i] = -z[i];
                        }
                    }
                }
            }
            SpinConfig(z)
        })
        .collect();
    let target_beta = schedule.last().unwrap().0;
    ReadSet::new(
        configs,
        Provenance {
            problem_hash: problem_hash(problem),
            sampler: "mcmc".into(),
            seed,
            beta: Some(target_beta),
            ..Default::default()
        },
    )
}

fn clamp(v: f64, range: (f64, f64)) -> f64 {
    v.clamp(range.0, range.1)
}

/// Quasi-static device simulation on an embedded problem.
///
/// Per programming cycle the programmed fields and couplings are perturbed by
/// `N(0, sigma^2)` and clipped to their ranges; `reads_per_cycle` samples are
/// then drawn from the Gibbs state at `beta_eff` (exact backend when the
/// problem fits the cap, MCMC otherwise). Cycles repeat until `n_reads`
/// reads have been collected.
pub fn simulate_device(
    physical: &PhysicalProblem,
    model: &DeviceModel,
    n_reads: usize,
    seed: u64,
) -> Result<ReadSet> {
    model.validate()?;
    let base = &physical.problem;
    let beta_eff = model.beta_eff();
    let n_cycles = n_reads.div_ceil(model.reads_per_cycle);
    let mut configs = Vec::with_capacity(n_reads);
    for cycle in 0..n_cycles {
        let cycle_seed = child_seed(seed, &[tag::CYCLE, cycle as u64]);
        let programmed = if model.control_noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(cycle_seed);
            let noise = Normal::new(0.0, model.control_noise_sigma).unwrap();
            let edges = base
                .edges()
                .iter()
                .map(|&(i, j, v)| (i, j, clamp(v + noise.sample(&mut rng), base.j_range)))
                .collect();
            let fields = base
                .fields()
                .iter()
                .map(|&(i, v)| (i, clamp(v + noise.sample(&mut rng), base.h_range)))
                .collect();
            IsingProblem::with_ranges(
                base.n_spins(),
                edges,
                fields,
                base.h_range,
                base.j_range,
                base.label,
            )?
        } else {
            base.clone()
        };
        let want = (n_reads - configs.len()).min(model.reads_per_cycle);
        let draw_seed = child_seed(cycle_seed, &[tag::READ]);
        let batch = if base.n_spins() <= model.exact_backend_cap {
            sample_exact_with_cap(&programmed, beta_eff, want, draw_seed, model.exact_backend_cap)?
        } else {
            let schedule: Vec<(f64, usize)> = model
                .mcmc_schedule
                .iter()
                .map(|&(f, s)| (f * beta_eff, s))
                .collect();
            sample_mcmc(&programmed, &schedule, want, draw_seed)?
        };
        configs.extend(batch.configs);
    }
    ReadSet::new(
        configs,
        Provenance {
            problem_hash: problem_hash(base),
            sampler: model.id(),
            seed,
            beta: Some(beta_eff),
            device_model: Some(model.id()),
            ..Default::default()
        },
    )
}
