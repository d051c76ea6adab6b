//! Adaptive NUTS with a diagonal metric, run over independent chains.
//!
//! Each chain owns an RNG stream derived from `(seed, chain index)`, so its
//! draws do not depend on how many other chains run or on thread scheduling.

pub mod adapt;
pub mod diagnostics;
pub mod hamiltonian;
mod nuts;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{compute_ess, compute_rhat};
pub use nuts::TransitionInfo;

use crate::error::{Error, Result};
use adapt::{DualAveraging, WindowedMetric};
use hamiltonian::{leapfrog, PhasePoint};

/// A non-finite log density or gradient. The sampler treats it as infinite
/// energy, which ends the trajectory as a divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection;

/// Unnormalized log density with gradient on an unconstrained space.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Writes `∇ log π(x)` into `grad` and returns `log π(x)`.
    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> std::result::Result<f64, Rejection>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub divergence_energy_threshold: f64,
    pub seed: u64,
    /// Random initial points are uniform on `[−init_radius, init_radius]`.
    pub init_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 1000,
            samples: 1000,
            target_accept: 0.8,
            max_depth: 10,
            divergence_energy_threshold: 1000.0,
            seed: 0,
            init_radius: 2.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.chains == 0 || self.samples == 0 || self.max_depth == 0 {
            return fail("chains, samples and max_depth must be at least 1");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return fail("target_accept must lie in (0, 1)");
        }
        if !(self.divergence_energy_threshold > 0.0) {
            return fail("divergence threshold must be positive");
        }
        if !(self.init_radius >= 0.0) {
            return fail("init radius must be non-negative");
        }
        Ok(())
    }
}

/// Post-warmup output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub draws: Vec<Vec<f64>>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<usize>,
    pub accept_stat: Vec<f64>,
    pub n_leapfrog: Vec<usize>,
    pub step_size: f64,
    pub inv_mass: Vec<f64>,
    pub warmup_divergences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    pub chains: Vec<ChainTrace>,
}

impl SamplerOutput {
    /// Fraction of post-warmup transitions flagged divergent.
    pub fn divergence_fraction(&self) -> f64 {
        let total: usize = self.chains.iter().map(|c| c.divergent.len()).sum();
        let div: usize = self.chains.iter().map(|c| c.divergent.iter().filter(|&&d| d).count()).sum();
        div as f64 / total.max(1) as f64
    }

    /// Per-chain series of coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.draws.iter().map(|d| d[i]).collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub names: Vec<String>,
    pub rhat: Vec<f64>,
    pub ess_bulk: Vec<f64>,
    pub divergence_fraction: f64,
}

impl Diagnostics {
    /// R̂ and bulk ESS for each named scalar series (`series[k]` is per-chain draws).
    pub fn from_series(names: Vec<String>, series: &[Vec<Vec<f64>>], divergence_fraction: f64) -> Result<Self> {
        let mut rhat = Vec::with_capacity(series.len());
        let mut ess_bulk = Vec::with_capacity(series.len());
        for chains in series {
            rhat.push(if chains.len() >= 2 { compute_rhat(chains)? } else { f64::NAN });
            ess_bulk.push(compute_ess(chains)?);
        }
        Ok(Self { names, rhat, ess_bulk, divergence_fraction })
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().filter(|r| r.is_finite()).fold(f64::NAN, f64::max)
    }
}

pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Step-size heuristic: double or halve until the one-step acceptance
/// crosses 0.8.
fn initial_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    point: &PhasePoint,
    inv_mass: &[f64],
    start: f64,
    rng: &mut R,
) -> f64 {
    let sampler = nuts::Nuts { target, inv_mass, step_size: start, max_depth: 1, max_energy_error: f64::INFINITY };
    let log_threshold = 0.8f64.ln();
    let mut eps = start;
    let mut direction = 0.0;
    for _ in 0..100 {
        let mut z = point.clone();
        sampler.sample_momentum(&mut z, rng);
        let h0 = z.energy(inv_mass);
        let h = match leapfrog(target, &mut z, inv_mass, eps) {
            Ok(()) => z.energy(inv_mass),
            Err(_) => f64::INFINITY,
        };
        let delta = h0 - if h.is_nan() { f64::INFINITY } else { h };
        if direction == 0.0 {
            direction = if delta > log_threshold { 1.0 } else { -1.0 };
        }
        if direction > 0.0 && !(delta > log_threshold) {
            break;
        }
        if direction < 0.0 && !(delta < log_threshold) {
            break;
        }
        eps = if direction > 0.0 { eps * 2.0 } else { eps * 0.5 };
        if !(1e-12..=1e7).contains(&eps) {
            eps = eps.clamp(1e-12, 1e7);
            break;
        }
    }
    eps
}

fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[f64]>,
    config: &SamplerConfig,
    chain: usize,
) -> Result<ChainTrace> {
    let mut rng = chain_rng(config.seed, chain);
    let dim = target.dim();
    let mut point = match init {
        Some(x) => PhasePoint::new(target, x.to_vec()).map_err(|_| Error::Initialization { chain })?,
        None => {
            let mut found = None;
            for _ in 0..100 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0) * config.init_radius).collect();
                if let Ok(p) = PhasePoint::new(target, x) {
                    found = Some(p);
                    break;
                }
            }
            found.ok_or(Error::Initialization { chain })?
        }
    };

    let mut inv_mass = vec![1.0; dim];
    let mut step = initial_step_size(target, &point, &inv_mass, 1.0, &mut rng);
    let mut dual = DualAveraging::new(config.target_accept, step);
    let mut metric = WindowedMetric::new(dim, config.warmup);
    let mut warmup_divergences = 0;

    for _ in 0..config.warmup {
        let sampler = nuts::Nuts {
            target,
            inv_mass: &inv_mass,
            step_size: step,
            max_depth: config.max_depth,
            max_energy_error: config.divergence_energy_threshold,
        };
        let (next, info) = sampler.transition(&point, &mut rng);
        point = next;
        warmup_divergences += usize::from(info.divergent);
        step = dual.update(info.accept_stat);
        if let Some(var) = metric.observe(&point.position) {
            inv_mass = var;
            step = initial_step_size(target, &point, &inv_mass, step, &mut rng);
            dual.restart(step);
        }
    }
    if config.warmup > 0 {
        step = dual.final_step();
    }

    let mut trace = ChainTrace {
        draws: Vec::with_capacity(config.samples),
        divergent: Vec::with_capacity(config.samples),
        tree_depth: Vec::with_capacity(config.samples),
        accept_stat: Vec::with_capacity(config.samples),
        n_leapfrog: Vec::with_capacity(config.samples),
        step_size: step,
        inv_mass: inv_mass.clone(),
        warmup_divergences,
    };
    let sampler = nuts::Nuts {
        target,
        inv_mass: &inv_mass,
        step_size: step,
        max_depth: config.max_depth,
        max_energy_error: config.divergence_energy_threshold,
    };
    for _ in 0..config.samples {
        let (next, info) = sampler.transition(&point, &mut rng);
        point = next;
        trace.draws.push(point.position.clone());
        trace.divergent.push(info.divergent);
        trace.tree_depth.push(info.depth);
        trace.accept_stat.push(info.accept_stat);
        trace.n_leapfrog.push(info.n_leapfrog);
    }
    Ok(trace)
}

/// Runs `config.chains` independent adaptive NUTS chains.
///
/// `init`, when given, must hold one start point per chain; otherwise start
/// points are drawn uniformly from `[−init_radius, init_radius]`.
pub fn run_chains<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[Vec<f64>]>,
    config: &SamplerConfig,
) -> Result<SamplerOutput> {
    config.validate()?;
    if let Some(points) = init {
        if points.len() != config.chains || points.iter().any(|p| p.len() != target.dim()) {
            return Err(Error::InvalidConfig(format!(
                "expected {} initial points of dimension {}",
                config.chains,
                target.dim()
            )));
        }
    }
    let chains = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(target, init.map(|p| p[c].as_slice()), config, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplerOutput { chains })
}

/// Runs the chains and computes diagnostics on every unconstrained coordinate.
pub fn run_chains_with_diagnostics<T: LogDensity + ?Sized>(
    target: &T,
    init: Option<&[Vec<f64>]>,
    config: &SamplerConfig,
) -> Result<(SamplerOutput, Diagnostics)> {
    let out = run_chains(target, init, config)?;
    let names = (0..target.dim()).map(|i| format!("x[{i}]")).collect();
    let series: Vec<_> = (0..target.dim()).map(|i| out.coordinate(i)).collect();
    let diag = Diagnostics::from_series(names, &series, out.divergence_fraction())?;
    Ok((out, diag))
}
