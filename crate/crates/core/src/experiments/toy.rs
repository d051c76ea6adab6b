//! Sparse normal means: `y_i = β*_i + ε_i`, `ε_i ~ N(0, 1)`, fitted with an
//! identity design.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{job_rng, job_seed};
use crate::elicitation::TauPrior;
use crate::error::{Error, Result};
use crate::model::{fit, posterior_meff, Dataset, Design, GlmModel, InterceptPrior, PriorSpec};
use crate::sampler::SamplerConfig;
use crate::shrinkage::{tau_reference_identity, GlmFamily, SlabSpec};

/// A named global-scale prior for the toy fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPrior {
    pub name: String,
    pub tau_prior: TauPrior,
    pub tau_scaled_by_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub n: usize,
    pub p_star: usize,
    /// Signal amplitudes `A`; each nonzero true coefficient equals `A`.
    pub signals: Vec<f64>,
    pub replications: usize,
    pub prior_variants: Vec<ToyPrior>,
    pub sampler: SamplerConfig,
}

impl ToyConfig {
    /// `τ = τ₀σ`, `τ ~ C⁺(0, τ₀²σ²)` and `τ ~ C⁺(0, 1)` with `τ₀ = p*/(n − p*)`.
    pub fn default_priors(n: usize, p_star: usize) -> Result<Vec<ToyPrior>> {
        let tau0 = tau_reference_identity(p_star as f64, n, 1.0)?;
        Ok(vec![
            ToyPrior { name: "tau0".into(), tau_prior: TauPrior::Fixed { tau: tau0 }, tau_scaled_by_sigma: true },
            ToyPrior {
                name: "half_cauchy_tau0".into(),
                tau_prior: TauPrior::HalfCauchy { scale: tau0 },
                tau_scaled_by_sigma: true,
            },
            ToyPrior {
                name: "half_cauchy_1".into(),
                tau_prior: TauPrior::HalfCauchy { scale: 1.0 },
                tau_scaled_by_sigma: false,
            },
        ])
    }

    /// Desk-scale defaults: `n = 400`, `p* = 20`, 20 replications,
    /// `A ∈ {1, 2, 4, 6, 8, 10}`, one chain of 500 warmup + 500 draws per fit.
    pub fn desk_scale() -> Self {
        Self {
            n: 400,
            p_star: 20,
            signals: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            replications: 20,
            prior_variants: Self::default_priors(400, 20).expect("valid defaults"),
            sampler: SamplerConfig { chains: 1, warmup: 500, samples: 500, ..SamplerConfig::default() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_star >= self.n {
            return Err(Error::InvalidConfig("p_star must be below n".into()));
        }
        if self.replications == 0 || self.signals.is_empty() || self.prior_variants.is_empty() {
            return Err(Error::InvalidConfig("need at least one replication, signal and prior".into()));
        }
        if let Some(a) = self.signals.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig(format!("signal {a} must be finite and non-negative")));
        }
        for p in &self.prior_variants {
            p.tau_prior.validate()?;
        }
        self.sampler.validate()
    }
}

/// Mean squared coefficient error for one `(A, prior)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRow {
    pub signal: f64,
    pub prior: String,
    pub mse_mean: f64,
    pub mse_se: f64,
    pub mse: Vec<f64>,
    pub divergence_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub rows: Vec<ToyRow>,
    /// Average MSE of the unshrunk estimate `β̂ = y` per signal.
    pub unshrunk_mse: Vec<(f64, f64)>,
}

impl ToyReport {
    pub fn row(&self, signal: f64, prior: &str) -> Option<&ToyRow> {
        self.rows.iter().find(|r| r.signal == signal && r.prior == prior)
    }
}

/// True coefficients and one data realization.
pub fn toy_data(n: usize, p_star: usize, signal: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = job_rng(seed, &[]);
    let beta: Vec<f64> = (0..n).map(|i| if i < p_star { signal } else { 0.0 }).collect();
    let y = beta.iter().map(|b| b + rng.sample::<f64, _>(StandardNormal)).collect();
    (beta, y)
}

fn toy_model(y: Vec<f64>, prior: &ToyPrior) -> Result<GlmModel> {
    let n = y.len();
    let data = Dataset::new(Design::Identity(n), y, GlmFamily::Gaussian)?;
    let mut spec = PriorSpec::new(prior.tau_prior, 1.0, SlabSpec::Infinite, GlmFamily::Gaussian);
    spec.tau_scaled_by_sigma = prior.tau_scaled_by_sigma;
    spec.intercept = InterceptPrior::Excluded;
    GlmModel::new(data, spec)
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Fits every prior variant to `replications` data sets per signal level and
/// reports the posterior-mean MSE averaged over replications. All priors see
/// the same data realizations.
pub fn run_toy(config: &ToyConfig, seed: u64) -> Result<ToyReport> {
    config.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..config.signals.len())
        .flat_map(|a| {
            (0..config.replications).flat_map(move |r| (0..config.prior_variants.len()).map(move |p| (a, r, p)))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(a, r, p)| {
            let data_seed = job_seed(seed, &[a as u64, r as u64]);
            let (beta, y) = toy_data(config.n, config.p_star, config.signals[a], data_seed);
            let model = toy_model(y, &config.prior_variants[p])?;
            let sampler =
                SamplerConfig { seed: job_seed(seed, &[a as u64, r as u64, p as u64]), ..config.sampler.clone() };
            let fitted = fit(&model, &sampler)?;
            log::debug!("toy A={} rep={r} prior={p} done", config.signals[a]);
            Ok((mse(&fitted.draws.beta_mean(), &beta), fitted.draws.divergence_fraction()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (a, &signal) in config.signals.iter().enumerate() {
        for (p, prior) in config.prior_variants.iter().enumerate() {
            let cell: Vec<(f64, f64)> =
                jobs.iter().zip(&results).filter(|((ja, _, jp), _)| *ja == a && *jp == p).map(|(_, v)| *v).collect();
            let errors: Vec<f64> = cell.iter().map(|c| c.0).collect();
            let (mse_mean, mse_se) = mean_se(&errors);
            let divergence_fraction = cell.iter().map(|c| c.1).sum::<f64>() / cell.len() as f64;
            rows.push(ToyRow { signal, prior: prior.name.clone(), mse_mean, mse_se, mse: errors, divergence_fraction });
        }
    }
    let unshrunk_mse = config
        .signals
        .iter()
        .enumerate()
        .map(|(a, &signal)| {
            let errs: Vec<f64> = (0..config.replications)
                .map(|r| {
                    let (beta, y) = toy_data(config.n, config.p_star, signal, job_seed(seed, &[a as u64, r as u64]));
                    mse(&y, &beta)
                })
                .collect();
            (signal, mean_se(&errs).0)
        })
        .collect();
    Ok(ToyReport { rows, unshrunk_mse })
}

/// Posterior `m_eff` for one `(data scale, τ choice)` case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub data_scale: f64,
    pub sigma_scaled: bool,
    pub meff_mean: f64,
    pub sigma_mean: f64,
    /// Posterior mean coefficients divided by the data scale.
    pub beta_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub tau0: f64,
    pub rows: Vec<ScalingRow>,
    /// `|m̄(0.1) − m̄(1)| / m̄(1)` with `τ = τ₀σ`.
    pub scaled_relative_change: f64,
    /// `m̄(0.1) / m̄(1)` with `τ = τ₀` fixed.
    pub unscaled_ratio: f64,
    pub scaled_is_stable: bool,
    pub unscaled_inflates: bool,
}

/// Fits the `A = 10` toy data at its original scale and multiplied by 0.1,
/// with `τ = τ₀` fixed and with `τ = τ₀σ`, and compares posterior `m_eff`.
pub fn run_toy_scaling(seed: u64, sampler: &SamplerConfig) -> Result<ScalingReport> {
    let (n, p_star) = (400, 20);
    let tau0 = tau_reference_identity(p_star as f64, n, 1.0)?;
    let (_, y) = toy_data(n, p_star, 10.0, job_seed(seed, &[0]));
    let cases = [(1.0, false), (0.1, false), (1.0, true), (0.1, true)];
    let rows = cases
        .par_iter()
        .enumerate()
        .map(|(k, &(scale, sigma_scaled))| {
            let prior = ToyPrior {
                name: String::new(),
                tau_prior: TauPrior::Fixed { tau: tau0 },
                tau_scaled_by_sigma: sigma_scaled,
            };
            let model = toy_model(y.iter().map(|v| v * scale).collect(), &prior)?;
            let config = SamplerConfig { seed: job_seed(seed, &[1, k as u64]), ..sampler.clone() };
            let fitted = fit(&model, &config)?;
            let meff = posterior_meff(&fitted.draws, model.data())?;
            let meff_mean = meff.values.iter().sum::<f64>() / meff.values.len() as f64;
            let sigma_mean =
                fitted.draws.iter().map(|d| d.sigma.unwrap_or(f64::NAN)).sum::<f64>() / fitted.draws.len() as f64;
            let beta_mean = fitted.draws.beta_mean().iter().map(|b| b / scale).collect();
            Ok(ScalingRow { data_scale: scale, sigma_scaled, meff_mean, sigma_mean, beta_mean })
        })
        .collect::<Result<Vec<_>>>()?;
    let get = |scale: f64, scaled: bool| {
        rows.iter().find(|r| r.data_scale == scale && r.sigma_scaled == scaled).map(|r| r.meff_mean).unwrap_or(f64::NAN)
    };
    let scaled_relative_change = (get(0.1, true) - get(1.0, true)).abs() / get(1.0, true);
    let unscaled_ratio = get(0.1, false) / get(1.0, false);
    Ok(ScalingReport {
        tau0,
        rows,
        scaled_relative_change,
        unscaled_ratio,
        scaled_is_stable: scaled_relative_change < 0.25,
        unscaled_inflates: unscaled_ratio > 2.0,
    })
}
