//! Logistic regression on two-class data where two features nearly
//! separate the classes and the rest are noise.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{job_rng, job_seed};
use crate::elicitation::{quantile_sorted, solve_tau_for_meff, TauPrior};
use crate::error::{Error, Result};
use crate::model::{fit, Dataset, Design, GlmModel, PriorSpec};
use crate::sampler::SamplerConfig;
use crate::shrinkage::{pseudo_variance, tau_reference, GlmFamily, ShrinkageContext, SlabSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableVariant {
    pub name: String,
    pub local_dof: f64,
    pub slab: SlabSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeparableConfig {
    pub n: usize,
    pub dim: usize,
    pub relevant: usize,
    /// Relevant features have mean `+offset` in class 1 and `−offset` in class 0.
    pub class_mean_offset: f64,
    pub feature_sd: f64,
    /// Relevant feature that must separate the classes on its own while the
    /// other relevant features do not. `None` accepts any two-class draw.
    pub separator: Option<usize>,
    /// Prior guess of the number of relevant coefficients.
    pub p0: f64,
    /// Degrees of freedom of the half-t prior on `τ`.
    pub tau_dof: f64,
    pub variants: Vec<SeparableVariant>,
    pub sampler: SamplerConfig,
}

impl Default for SeparableConfig {
    fn default() -> Self {
        Self {
            n: 30,
            dim: 100,
            relevant: 2,
            class_mean_offset: 1.0,
            feature_sd: 0.5,
            separator: Some(1),
            p0: 2.0,
            tau_dof: 3.0,
            variants: vec![
                SeparableVariant { name: "hs_nu1".into(), local_dof: 1.0, slab: SlabSpec::Infinite },
                SeparableVariant { name: "hs_nu3".into(), local_dof: 3.0, slab: SlabSpec::Infinite },
                SeparableVariant { name: "rhs_c2".into(), local_dof: 1.0, slab: SlabSpec::FixedScale { c: 2.0 } },
                SeparableVariant {
                    name: "rhs_invgamma".into(),
                    local_dof: 1.0,
                    slab: SlabSpec::InverseGammaOnCSquared { alpha: 2.0, beta: 8.0 },
                },
            ],
            sampler: SamplerConfig::default(),
        }
    }
}

impl SeparableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relevant >= self.dim || self.n < 2 {
            return Err(Error::InvalidConfig("need relevant < dim and at least two observations".into()));
        }
        if self.separator.is_some_and(|j| j >= self.relevant) {
            return Err(Error::InvalidConfig("separator must index a relevant feature".into()));
        }
        if !(self.feature_sd > 0.0) || !(self.p0 > 0.0) || !(self.tau_dof > 0.0) {
            return Err(Error::InvalidConfig("feature_sd, p0 and tau_dof must be positive".into()));
        }
        for v in &self.variants {
            v.slab.validate()?;
            if !(v.local_dof > 0.0) {
                return Err(Error::InvalidConfig(format!("variant {}: local dof must be positive", v.name)));
            }
        }
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub tau_scale: f64,
    /// `(level, β₁ quantile, β₂ quantile)`.
    pub beta12_quantiles: Vec<(f64, f64, f64)>,
    pub abs_beta2_q99: f64,
    /// Central 80% interval width for each irrelevant coefficient.
    pub irrelevant_widths: Vec<f64>,
    pub median_irrelevant_width: f64,
    pub divergence_fraction: f64,
    pub prob_beta2_positive: f64,
    pub max_rhat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableReport {
    /// Seed offset used when earlier draws produced a single class.
    pub data_attempt: u64,
    pub variants: Vec<VariantReport>,
}

impl SeparableReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// Whether a threshold on feature `j` splits the two classes.
fn separates(x: &nalgebra::DMatrix<f64>, y: &[f64], j: usize) -> bool {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (i, &yi) in y.iter().enumerate() {
        let k = usize::from(yi == 1.0);
        lo[k] = lo[k].min(x[(i, j)]);
        hi[k] = hi[k].max(x[(i, j)]);
    }
    hi[0] < lo[1] || hi[1] < lo[0]
}

/// Generates the two-class data; labels are fair coin flips. Draws with a
/// single class, or without the requested solitary separator, are
/// regenerated with a shifted seed.
pub fn separable_data(config: &SeparableConfig, seed: u64) -> Result<(Dataset, u64)> {
    for attempt in 0..1000u64 {
        let mut rng = job_rng(seed, &[attempt]);
        let y: Vec<f64> = (0..config.n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if ones == 0 || ones == config.n {
            log::info!("separable data attempt {attempt} produced one class; regenerating");
            continue;
        }
        let relevant = Normal::new(0.0, config.feature_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let x = nalgebra::DMatrix::from_fn(config.n, config.dim, |i, j| {
            if j < config.relevant {
                let sign = if y[i] == 1.0 { 1.0 } else { -1.0 };
                sign * config.class_mean_offset + relevant.sample(&mut rng)
            } else {
                rng.sample(StandardNormal)
            }
        });
        if let Some(sep) = config.separator {
            let solitary = (0..config.relevant).all(|j| separates(&x, &y, j) == (j == sep));
            if !solitary {
                log::info!("separable data attempt {attempt} lacks a solitary separator; regenerating");
                continue;
            }
        }
        return Ok((Dataset::new(Design::Dense(x), y, GlmFamily::BinomialLogit)?, attempt));
    }
    Err(Error::Data("could not generate data with the requested class structure".into()))
}

fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    quantile_sorted(values, q)
}

/// Fits each prior variant to the same separable data set.
pub fn run_separable(config: &SeparableConfig, seed: u64) -> Result<SeparableReport> {
    config.validate()?;
    let (data, data_attempt) = separable_data(config, job_seed(seed, &[0]))?;
    let pseudo_sd = pseudo_variance(&GlmFamily::BinomialLogit, 0.5, 1.0)?.sqrt();
    let ctx = ShrinkageContext::new(config.n, config.dim, pseudo_sd)?;
    let levels = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

    let variants = config
        .variants
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let tau_scale = if v.local_dof == 1.0 {
                tau_reference(config.p0, &ctx)?
            } else {
                solve_tau_for_meff(config.p0, v.local_dof, &ctx)?
            };
            let tau_prior = TauPrior::HalfStudentT { dof: config.tau_dof, scale: tau_scale };
            let prior = PriorSpec::new(tau_prior, v.local_dof, v.slab, GlmFamily::BinomialLogit);
            let model = GlmModel::new(data.clone(), prior)?;
            let sampler = SamplerConfig { seed: job_seed(seed, &[1, k as u64]), ..config.sampler.clone() };
            let fitted = fit(&model, &sampler)?;
            let draws = &fitted.draws;
            let mut b1: Vec<f64> = draws.iter().map(|d| d.beta[0]).collect();
            let mut b2: Vec<f64> = draws.iter().map(|d| d.beta[1.min(config.dim - 1)]).collect();
            let beta12_quantiles = levels.iter().map(|&q| (q, quantile(&mut b1, q), quantile(&mut b2, q))).collect();
            let prob_beta2_positive = b2.iter().filter(|&&b| b > 0.0).count() as f64 / b2.len() as f64;
            let mut abs_b2: Vec<f64> = b2.iter().map(|b| b.abs()).collect();
            let irrelevant_widths: Vec<f64> = (config.relevant..config.dim)
                .map(|j| {
                    let mut v: Vec<f64> = draws.iter().map(|d| d.beta[j]).collect();
                    quantile(&mut v, 0.9) - quantile(&mut v, 0.1)
                })
                .collect();
            let mut widths = irrelevant_widths.clone();
            Ok(VariantReport {
                name: v.name.clone(),
                tau_scale,
                beta12_quantiles,
                abs_beta2_q99: quantile(&mut abs_b2, 0.99),
                median_irrelevant_width: quantile(&mut widths, 0.5),
                irrelevant_widths,
                divergence_fraction: draws.divergence_fraction(),
                prob_beta2_positive,
                max_rhat: fitted.diagnostics.max_rhat(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparableReport { data_attempt, variants })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_has_two_classes_and_shifted_means() {
        let config = SeparableConfig::default();
        let (data, _) = separable_data(&config, 3).unwrap();
        assert_eq!((data.n(), data.dim()), (30, 100));
        let x = data.design.to_dense();
        let ones: Vec<usize> = (0..30).filter(|&i| data.y[i] == 1.0).collect();
        assert!(!ones.is_empty() && ones.len() < 30);
        let mean1 = ones.iter().map(|&i| x[(i, 0)]).sum::<f64>() / ones.len() as f64;
        assert!((mean1 - 1.0).abs() < 0.5);
        assert_eq!(separable_data(&config, 3).unwrap().0, data);
    }

    #[test]
    fn only_the_requested_feature_separates() {
        let config = SeparableConfig::default();
        for seed in 0..5 {
            let (data, _) = separable_data(&config, seed).unwrap();
            let x = data.design.to_dense();
            assert!(separates(&x, &data.y, 1));
            assert!(!separates(&x, &data.y, 0));
        }
    }

    #[test]
    fn separation_check_allows_either_orientation() {
        let x = nalgebra::DMatrix::from_column_slice(4, 1, &[-1.0, -2.0, 3.0, 4.0]);
        assert!(separates(&x, &[1.0, 1.0, 0.0, 0.0], 0));
        assert!(separates(&x, &[0.0, 0.0, 1.0, 1.0], 0));
        assert!(!separates(&x, &[1.0, 0.0, 1.0, 0.0], 0));
    }
}
