//! Fitting, constrained posterior draws and derived posterior summaries.

use serde::{Deserialize, Serialize};

use super::{Dataset, GlmModel};
use crate::elicitation::{MeffDraws, MeffSource};
use crate::error::{Error, Result};
use crate::sampler::{run_chains, Diagnostics, SamplerConfig, SamplerOutput};
use crate::shrinkage::{meff_from_kappas, pseudo_variance, GlmFamily};

/// One posterior draw on the constrained scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub beta: Vec<f64>,
    pub beta0: Option<f64>,
    pub tau: f64,
    pub lambdas: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
    /// Slab width; infinite for the pure horseshoe.
    pub c: f64,
    /// Noise scale; `None` for logistic regression.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub family: GlmFamily,
    /// `chains[k][s]` is draw `s` of chain `k`.
    pub chains: Vec<Vec<Draw>>,
    pub divergent: Vec<Vec<bool>>,
    pub tree_depth: Vec<Vec<usize>>,
    pub accept_stat: Vec<Vec<f64>>,
}

impl PosteriorDraws {
    pub fn iter(&self) -> impl Iterator<Item = &Draw> {
        self.chains.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Posterior mean of the coefficient vector.
    pub fn beta_mean(&self) -> Vec<f64> {
        let d = self.iter().next().map_or(0, |d| d.beta.len());
        let mut mean = vec![0.0; d];
        for draw in self.iter() {
            for (m, b) in mean.iter_mut().zip(&draw.beta) {
                *m += b;
            }
        }
        let s = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= s);
        mean
    }

    /// Per-chain series of a scalar function of the draws.
    pub fn series(&self, f: impl Fn(&Draw) -> f64) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(&f).collect()).collect()
    }

    pub fn divergence_fraction(&self) -> f64 {
        let total: usize = self.divergent.iter().map(Vec::len).sum();
        let div = self.divergent.iter().flatten().filter(|&&d| d).count();
        div as f64 / total.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub draws: PosteriorDraws,
    pub diagnostics: Diagnostics,
    /// Unconstrained draws and sampler statistics.
    pub output: SamplerOutput,
}

/// Runs the sampler and computes R̂ / ESS for `β`, `β₀`, `τ`, `c` and `σ`.
pub fn fit(model: &GlmModel, config: &SamplerConfig) -> Result<Fit> {
    let output = run_chains(model, None, config)?;
    let chains: Vec<Vec<Draw>> =
        output.chains.iter().map(|c| c.draws.iter().map(|x| model.transform_to_constrained(x)).collect()).collect();
    let draws = PosteriorDraws {
        family: model.data().family,
        chains,
        divergent: output.chains.iter().map(|c| c.divergent.clone()).collect(),
        tree_depth: output.chains.iter().map(|c| c.tree_depth.clone()).collect(),
        accept_stat: output.chains.iter().map(|c| c.accept_stat.clone()).collect(),
    };
    let diagnostics = constrained_diagnostics(model, &draws)?;
    Ok(Fit { draws, diagnostics, output })
}

fn constrained_diagnostics(model: &GlmModel, draws: &PosteriorDraws) -> Result<Diagnostics> {
    let mut names = Vec::new();
    let mut series = Vec::new();
    for j in 0..model.data().dim() {
        names.push(format!("beta[{j}]"));
        series.push(draws.series(|d| d.beta[j]));
    }
    let l = model.layout();
    if l.beta0.is_some() {
        names.push("beta0".into());
        series.push(draws.series(|d| d.beta0.unwrap_or(0.0)));
    }
    if l.tau.is_some() {
        names.push("tau".into());
        series.push(draws.series(|d| d.tau));
    }
    if l.c2.is_some() {
        names.push("c".into());
        series.push(draws.series(|d| d.c));
    }
    if l.sigma.is_some() {
        names.push("sigma".into());
        series.push(draws.series(|d| d.sigma.unwrap_or(1.0)));
    }
    Diagnostics::from_series(names, &series, draws.divergence_fraction())
}

/// Noise scale entering `κ_j`: the draw's `σ`, or for logistic regression
/// the pseudo standard deviation at the sample mean of `y`.
fn noise_scale(draw: &Draw, data: &Dataset, pseudo_sd: Option<f64>) -> f64 {
    match (draw.sigma, data.family) {
        (Some(s), _) => s,
        _ => pseudo_sd.unwrap_or(1.0),
    }
}

/// Per-draw effective number of nonzero coefficients, using the regularized
/// local scales `λ̃_j`.
pub fn posterior_meff(draws: &PosteriorDraws, data: &Dataset) -> Result<MeffDraws> {
    if draws.is_empty() {
        return Err(Error::Empty("posterior draws"));
    }
    let pseudo_sd = match data.family {
        GlmFamily::Gaussian => None,
        family => {
            let mean = data.y.iter().sum::<f64>() / data.n() as f64;
            Some(pseudo_variance(&family, mean, 1.0)?.sqrt())
        }
    };
    let ctx = data.shrinkage_context(1.0)?;
    let mut kappas = vec![0.0; data.dim()];
    let values = draws
        .iter()
        .map(|draw| {
            let sigma = noise_scale(draw, data, pseudo_sd);
            for (j, k) in kappas.iter_mut().enumerate() {
                let a = ctx.a(draw.tau / sigma, j) * draw.lambda_tilde[j];
                *k = 1.0 / (1.0 + a * a);
            }
            meff_from_kappas(&kappas)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeffDraws { values, dim: data.dim(), source: MeffSource::Posterior })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMetrics {
    /// Mean log predictive density.
    pub mlpd: f64,
    /// Mean squared error of the posterior mean prediction (linear model).
    pub mse: Option<f64>,
    /// Classification accuracy at posterior mean probability 0.5 (logistic model).
    pub accuracy: Option<f64>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Held-out predictive performance averaged over posterior draws.
pub fn predictive_metrics(draws: &PosteriorDraws, test: &Dataset) -> Result<PredictiveMetrics> {
    if draws.is_empty() {
        return Err(Error::Empty("posterior draws"));
    }
    if test.family != draws.family {
        return Err(Error::Data("test family does not match the fitted model".into()));
    }
    let n = test.n();
    let s = draws.len();
    // log_p[i][k]: log density of observation i under draw k.
    let mut log_p = vec![vec![0.0; s]; n];
    let mut mean_pred = vec![0.0; n];
    for (k, draw) in draws.iter().enumerate() {
        let mut eta = test.design.mul(&draw.beta);
        let b0 = draw.beta0.unwrap_or(0.0);
        for (i, e) in eta.iter_mut().enumerate() {
            *e += b0;
            let y = test.y[i];
            match test.family {
                GlmFamily::Gaussian => {
                    let sigma = draw.sigma.unwrap_or(1.0);
                    let r = (y - *e) / sigma;
                    log_p[i][k] = -0.5 * r * r - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
                    mean_pred[i] += *e / s as f64;
                }
                _ => {
                    let softplus = e.max(0.0) + (-e.abs()).exp().ln_1p();
                    log_p[i][k] = y * *e - softplus;
                    mean_pred[i] += 1.0 / (1.0 + (-*e).exp()) / s as f64;
                }
            }
        }
    }
    let ln_s = (s as f64).ln();
    let mlpd = log_p.iter().map(|row| log_sum_exp(row) - ln_s).sum::<f64>() / n as f64;
    let (mse, accuracy) = match test.family {
        GlmFamily::Gaussian => {
            let mse = mean_pred.iter().zip(&test.y).map(|(m, y)| (y - m).powi(2)).sum::<f64>() / n as f64;
            (Some(mse), None)
        }
        _ => {
            let hits = mean_pred.iter().zip(&test.y).filter(|(p, y)| (**p > 0.5) == (**y == 1.0)).count();
            (None, Some(hits as f64 / n as f64))
        }
    };
    Ok(PredictiveMetrics { mlpd, mse, accuracy })
}
