//! Log posterior densities for linear-Gaussian and logistic regression under
//! horseshoe-family priors, on an unconstrained space.
//!
//! Coefficients are non-centered: `β_j = z_j · τ · λ̃_j` with `z_j ~ N(0, 1)`.
//! Positive parameters are sampled on the log scale and the log-Jacobian of
//! every exponential transform is included in the density. The alternative
//! [`Parameterization::ScaleMixture`] writes each half-t scale as
//! `r1 · sqrt(r2)` with `r1 ~ N⁺(0, 1)` and `r2 ~ InvGamma(ν/2, ν/2)`.

mod data;
mod posterior;

pub use data::{Dataset, Design, Standardizer};
pub use posterior::{fit, posterior_meff, predictive_metrics, Draw, Fit, PosteriorDraws, PredictiveMetrics};

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::elicitation::TauPrior;
use crate::error::{ensure_positive, Error, Result};
use crate::sampler::{LogDensity, Rejection};
use crate::shrinkage::{GlmFamily, SlabSpec};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterceptPrior {
    /// No intercept term.
    Excluded,
    /// Improper uniform prior.
    Flat,
    Normal {
        sd: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoisePrior {
    /// `p(σ²) ∝ σ⁻²`, i.e. flat on `log σ`.
    LogUniform,
    /// `σ` held at a known value.
    Fixed { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    #[default]
    NonCentered,
    ScaleMixture,
}

/// Prior on all model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub tau_prior: TauPrior,
    /// Multiply the `τ` prior scale by `σ` (Gaussian likelihood only).
    #[serde(default)]
    pub tau_scaled_by_sigma: bool,
    /// Degrees of freedom of the half-t local scales; 1 is the horseshoe.
    pub local_dof: f64,
    pub slab: SlabSpec,
    pub intercept: InterceptPrior,
    /// Ignored by the logistic model.
    pub noise: NoisePrior,
    #[serde(default)]
    pub parameterization: Parameterization,
    /// Holds every `λ_j` at the given values instead of sampling them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_lambdas: Option<Vec<f64>>,
}

impl PriorSpec {
    /// Horseshoe-family prior with the default intercept for `family`:
    /// `N(0, 5²)` for logistic regression, flat for the linear model.
    pub fn new(tau_prior: TauPrior, local_dof: f64, slab: SlabSpec, family: GlmFamily) -> Self {
        let intercept = match family {
            GlmFamily::BinomialLogit => InterceptPrior::Normal { sd: 5.0 },
            _ => InterceptPrior::Flat,
        };
        Self {
            tau_prior,
            tau_scaled_by_sigma: family == GlmFamily::Gaussian,
            local_dof,
            slab,
            intercept,
            noise: NoisePrior::LogUniform,
            parameterization: Parameterization::NonCentered,
            fixed_lambdas: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tau_prior.validate()?;
        ensure_positive("local dof", self.local_dof)?;
        self.slab.validate()?;
        if let InterceptPrior::Normal { sd } = self.intercept {
            ensure_positive("intercept sd", sd)?;
        }
        if let NoisePrior::Fixed { sigma } = self.noise {
            ensure_positive("sigma", sigma)?;
        }
        if let Some(l) = &self.fixed_lambdas {
            for v in l {
                ensure_positive("fixed lambda", *v)?;
            }
        }
        Ok(())
    }
}

/// Log density of a half-Student-t with `dof` degrees of freedom and scale `scale`.
pub fn half_t_log_density(x: f64, dof: f64, scale: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = x / scale;
    half_t_const(dof) - scale.ln() - 0.5 * (dof + 1.0) * (r * r / dof).ln_1p()
}

fn half_t_const(dof: f64) -> f64 {
    LN_2 + ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln()
}

fn inv_gamma_const(alpha: f64, beta: f64) -> f64 {
    alpha * beta.ln() - ln_gamma(alpha)
}

/// Positions of each parameter block in the unconstrained vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub dim: usize,
    /// Start of the local block (`log λ`, or `log r1` under the scale mixture).
    pub local: Option<usize>,
    /// Start of the `log r2` local block under the scale mixture.
    pub local_mix: Option<usize>,
    pub tau: Option<usize>,
    pub tau_mix: Option<usize>,
    pub c2: Option<usize>,
    pub beta0: Option<usize>,
    pub sigma: Option<usize>,
    pub len: usize,
}

impl Layout {
    fn new(dim: usize, prior: &PriorSpec, family: GlmFamily) -> Self {
        let mixture = prior.parameterization == Parameterization::ScaleMixture;
        let mut next = dim;
        let mut take = |k: usize, on: bool| {
            on.then(|| {
                let at = next;
                next += k;
                at
            })
        };
        let sampled_locals = prior.fixed_lambdas.is_none();
        let local = take(dim, sampled_locals);
        let local_mix = take(dim, sampled_locals && mixture);
        let tau_free = !matches!(prior.tau_prior, TauPrior::Fixed { .. });
        let tau = take(1, tau_free);
        let tau_mix = take(1, tau_free && mixture && prior.tau_prior.dof().is_some());
        let c2 = take(1, matches!(prior.slab, SlabSpec::InverseGammaOnCSquared { .. }));
        let beta0 = take(1, prior.intercept != InterceptPrior::Excluded);
        let sigma = take(1, family == GlmFamily::Gaussian && prior.noise == NoisePrior::LogUniform);
        Self { dim, local, local_mix, tau, tau_mix, c2, beta0, sigma, len: next }
    }

    /// Names of the unconstrained coordinates.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.len];
        for (j, name) in names.iter_mut().take(self.dim).enumerate() {
            *name = format!("z[{j}]");
        }
        let (local, local_mix) = match self.local_mix {
            Some(_) => ("log_r1_local", "log_r2_local"),
            None => ("log_lambda", ""),
        };
        for (start, label) in [(self.local, local), (self.local_mix, local_mix)] {
            if let Some(s) = start {
                for j in 0..self.dim {
                    names[s + j] = format!("{label}[{j}]");
                }
            }
        }
        let tau_label = if self.tau_mix.is_some() { "log_r1_global" } else { "log_tau" };
        for (slot, label) in [
            (self.tau, tau_label),
            (self.tau_mix, "log_r2_global"),
            (self.c2, "log_c2"),
            (self.beta0, "beta0"),
            (self.sigma, "log_sigma"),
        ] {
            if let Some(i) = slot {
                names[i] = label.to_string();
            }
        }
        names
    }
}

/// Typed view of the unconstrained parameter vector.
///
/// Under the scale mixture `log_lambda` holds `log r1_j` and
/// `log_lambda_mix` holds `log r2_j`; likewise for the global pair. When the
/// `τ` prior is scaled by `σ`, `log_tau` refers to `τ / σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub z: Vec<f64>,
    pub log_lambda: Vec<f64>,
    pub log_lambda_mix: Option<Vec<f64>>,
    pub log_tau: Option<f64>,
    pub log_tau_mix: Option<f64>,
    pub log_c2: Option<f64>,
    pub beta0: Option<f64>,
    pub log_sigma: Option<f64>,
}

/// Regression model with a horseshoe-family prior; implements [`LogDensity`].
#[derive(Debug, Clone)]
pub struct GlmModel {
    data: Dataset,
    prior: PriorSpec,
    layout: Layout,
    local_const: f64,
    tau_const: f64,
}

/// Constrained quantities and the partial derivatives needed by the gradient.
struct Forward {
    beta: Vec<f64>,
    lambdas: Vec<f64>,
    lambda_tilde: Vec<f64>,
    /// `∂ log β_j / ∂ log λ_j = ∂ log β_j / ∂ log τ`.
    q: Vec<f64>,
    tau: f64,
    c: f64,
    sigma: f64,
    beta0: f64,
}

impl GlmModel {
    pub fn new(data: Dataset, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if !matches!(data.family, GlmFamily::Gaussian | GlmFamily::BinomialLogit) {
            return Err(Error::InvalidConfig("only gaussian and bernoulli likelihoods can be fitted".into()));
        }
        if prior.tau_scaled_by_sigma && data.family != GlmFamily::Gaussian {
            return Err(Error::InvalidConfig("tau can only be scaled by sigma in the linear model".into()));
        }
        if let Some(l) = &prior.fixed_lambdas {
            if l.len() != data.dim() {
                return Err(Error::InvalidConfig(format!("{} fixed lambdas for {} predictors", l.len(), data.dim())));
            }
        }
        let layout = Layout::new(data.dim(), &prior, data.family);
        let mixture = prior.parameterization == Parameterization::ScaleMixture;
        let local_const = if mixture {
            LN_2 - HALF_LN_2PI + inv_gamma_const(0.5 * prior.local_dof, 0.5 * prior.local_dof)
        } else {
            half_t_const(prior.local_dof)
        };
        let tau_const = match prior.tau_prior {
            TauPrior::Fixed { .. } => 0.0,
            TauPrior::HalfNormal { scale } => LN_2 - HALF_LN_2PI - scale.ln(),
            _ => {
                let dof = prior.tau_prior.dof().unwrap_or(1.0);
                if mixture {
                    LN_2 - HALF_LN_2PI + inv_gamma_const(0.5 * dof, 0.5 * dof)
                } else {
                    half_t_const(dof) - prior.tau_prior.scale().ln()
                }
            }
        };
        Ok(Self { data, prior, layout, local_const, tau_const })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn pack(&self, p: &ModelParams) -> Result<Vec<f64>> {
        let l = &self.layout;
        let d = l.dim;
        let bad = |what: &str| Error::InvalidConfig(format!("parameter {what} does not match the layout"));
        let mut x = vec![0.0; l.len];
        if p.z.len() != d {
            return Err(bad("z"));
        }
        x[..d].copy_from_slice(&p.z);
        match l.local {
            Some(s) if p.log_lambda.len() == d => x[s..s + d].copy_from_slice(&p.log_lambda),
            None if p.log_lambda.is_empty() => {}
            _ => return Err(bad("log_lambda")),
        }
        match (l.local_mix, &p.log_lambda_mix) {
            (Some(s), Some(v)) if v.len() == d => x[s..s + d].copy_from_slice(v),
            (None, None) => {}
            _ => return Err(bad("log_lambda_mix")),
        }
        for (slot, value, name) in [
            (l.tau, p.log_tau, "log_tau"),
            (l.tau_mix, p.log_tau_mix, "log_tau_mix"),
            (l.c2, p.log_c2, "log_c2"),
            (l.beta0, p.beta0, "beta0"),
            (l.sigma, p.log_sigma, "log_sigma"),
        ] {
            match (slot, value) {
                (Some(i), Some(v)) => x[i] = v,
                (None, None) => {}
                _ => return Err(bad(name)),
            }
        }
        Ok(x)
    }

    pub fn unpack(&self, x: &[f64]) -> ModelParams {
        let l = &self.layout;
        let d = l.dim;
        ModelParams {
            z: x[..d].to_vec(),
            log_lambda: l.local.map_or_else(Vec::new, |s| x[s..s + d].to_vec()),
            log_lambda_mix: l.local_mix.map(|s| x[s..s + d].to_vec()),
            log_tau: l.tau.map(|i| x[i]),
            log_tau_mix: l.tau_mix.map(|i| x[i]),
            log_c2: l.c2.map(|i| x[i]),
            beta0: l.beta0.map(|i| x[i]),
            log_sigma: l.sigma.map(|i| x[i]),
        }
    }

    /// Constrained parameters of an unconstrained point.
    pub fn transform_to_constrained(&self, x: &[f64]) -> Draw {
        let f = self.forward(x);
        Draw {
            beta: f.beta,
            beta0: self.layout.beta0.map(|_| f.beta0),
            tau: f.tau,
            lambdas: f.lambdas,
            lambda_tilde: f.lambda_tilde,
            c: f.c,
            sigma: (self.data.family == GlmFamily::Gaussian).then_some(f.sigma),
        }
    }

    fn sigma_of(&self, x: &[f64]) -> f64 {
        match (self.layout.sigma, self.prior.noise) {
            (Some(i), _) => x[i].exp(),
            (None, NoisePrior::Fixed { sigma }) if self.data.family == GlmFamily::Gaussian => sigma,
            _ => 1.0,
        }
    }

    /// `τ / g` where `g` is `σ` for a σ-scaled prior and 1 otherwise.
    fn tau_raw(&self, x: &[f64]) -> f64 {
        match self.prior.tau_prior {
            TauPrior::Fixed { tau } => tau,
            prior => {
                let i = self.layout.tau.expect("free tau has a slot");
                match self.layout.tau_mix {
                    Some(k) => prior.scale() * (x[i] + 0.5 * x[k]).exp(),
                    None => x[i].exp(),
                }
            }
        }
    }

    fn c_squared(&self, x: &[f64]) -> f64 {
        match self.prior.slab {
            SlabSpec::Infinite => f64::INFINITY,
            SlabSpec::FixedScale { c } => c * c,
            SlabSpec::InverseGammaOnCSquared { .. } => x[self.layout.c2.expect("slab slot")].exp(),
        }
    }

    fn lambda(&self, x: &[f64], j: usize) -> f64 {
        if let Some(l) = &self.prior.fixed_lambdas {
            return l[j];
        }
        let s = self.layout.local.expect("local slot");
        match self.layout.local_mix {
            Some(m) => (x[s + j] + 0.5 * x[m + j]).exp(),
            None => x[s + j].exp(),
        }
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let d = self.layout.dim;
        let sigma = self.sigma_of(x);
        let scale = if self.prior.tau_scaled_by_sigma { sigma } else { 1.0 };
        let tau = self.tau_raw(x) * scale;
        let c2 = self.c_squared(x);
        let inv_c2 = if c2.is_infinite() { 0.0 } else { 1.0 / c2 };
        let mut f = Forward {
            beta: vec![0.0; d],
            lambdas: vec![0.0; d],
            lambda_tilde: vec![0.0; d],
            q: vec![1.0; d],
            tau,
            c: c2.sqrt(),
            sigma,
            beta0: self.layout.beta0.map_or(0.0, |i| x[i]),
        };
        for j in 0..d {
            let lam = self.lambda(x, j);
            let lt = if inv_c2 == 0.0 {
                lam
            } else {
                let t = tau * lam;
                let q = 1.0 / (1.0 + t * t * inv_c2);
                f.q[j] = q;
                lam * q.sqrt()
            };
            f.lambdas[j] = lam;
            f.lambda_tilde[j] = lt;
            f.beta[j] = x[j] * lt * tau;
        }
        f
    }

    /// Log posterior density (with all normalizing constants of proper
    /// factors) and its gradient.
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let l = &self.layout;
        let d = l.dim;
        let prior = &self.prior;
        grad.fill(0.0);
        let fw = self.forward(x);
        let mut lp = 0.0;

        // Standardized innovations.
        for j in 0..d {
            lp -= 0.5 * x[j] * x[j] + HALF_LN_2PI;
            grad[j] -= x[j];
        }

        // Local scales.
        if let Some(s) = l.local {
            let nu = prior.local_dof;
            for j in 0..d {
                lp += self.local_const;
                match l.local_mix {
                    Some(m) => {
                        let (a, b) = (x[s + j], x[m + j]);
                        let r1 = a.exp();
                        let inv_r2 = (-b).exp();
                        lp += -0.5 * r1 * r1 + a - 0.5 * nu * b - 0.5 * nu * inv_r2;
                        grad[s + j] += 1.0 - r1 * r1;
                        grad[m + j] += 0.5 * nu * (inv_r2 - 1.0);
                    }
                    None => {
                        let lam2 = fw.lambdas[j] * fw.lambdas[j];
                        lp += -0.5 * (nu + 1.0) * (1.0 + lam2 / nu).ln() + x[s + j];
                        grad[s + j] += 1.0 - (nu + 1.0) * lam2 / (nu + lam2);
                    }
                }
            }
        }

        // Global scale.
        if let Some(i) = l.tau {
            lp += self.tau_const;
            let u = x[i];
            match (prior.tau_prior, l.tau_mix) {
                (TauPrior::HalfNormal { scale }, _) => {
                    let r = u.exp() / scale;
                    lp += -0.5 * r * r + u;
                    grad[i] += 1.0 - r * r;
                }
                (tp, Some(k)) => {
                    let nu = tp.dof().expect("half-t");
                    let r1 = u.exp();
                    let inv_r2 = (-x[k]).exp();
                    lp += -0.5 * r1 * r1 + u - 0.5 * nu * x[k] - 0.5 * nu * inv_r2;
                    grad[i] += 1.0 - r1 * r1;
                    grad[k] += 0.5 * nu * (inv_r2 - 1.0);
                }
                (tp, None) => {
                    let nu = tp.dof().expect("half-t");
                    let r = u.exp() / tp.scale();
                    lp += -0.5 * (nu + 1.0) * (r * r / nu).ln_1p() + u;
                    grad[i] += 1.0 - (nu + 1.0) * r * r / (nu + r * r);
                }
            }
        }

        // Slab.
        if let (Some(i), SlabSpec::InverseGammaOnCSquared { alpha, beta }) = (l.c2, prior.slab) {
            let inv_c2 = (-x[i]).exp();
            lp += inv_gamma_const(alpha, beta) - alpha * x[i] - beta * inv_c2;
            grad[i] += -alpha + beta * inv_c2;
        }

        // Intercept.
        if let (Some(i), InterceptPrior::Normal { sd }) = (l.beta0, prior.intercept) {
            let r = x[i] / sd;
            lp -= 0.5 * r * r + HALF_LN_2PI + sd.ln();
            grad[i] -= r / sd;
        }

        // Likelihood.
        let mut eta = self.data.design.mul(&fw.beta);
        for e in &mut eta {
            *e += fw.beta0;
        }
        let y = &self.data.y;
        let mut g_eta = vec![0.0; eta.len()];
        match self.data.family {
            GlmFamily::Gaussian => {
                let n = y.len() as f64;
                let inv_var = 1.0 / (fw.sigma * fw.sigma);
                let mut rss = 0.0;
                for ((g, e), yi) in g_eta.iter_mut().zip(&eta).zip(y) {
                    let r = yi - e;
                    rss += r * r;
                    *g = r * inv_var;
                }
                lp += -n * fw.sigma.ln() - n * HALF_LN_2PI - 0.5 * rss * inv_var;
                if let Some(i) = l.sigma {
                    grad[i] += -n + rss * inv_var;
                }
            }
            _ => {
                for ((g, e), yi) in g_eta.iter_mut().zip(&eta).zip(y) {
                    let softplus = e.max(0.0) + (-e.abs()).exp().ln_1p();
                    lp += yi * e - softplus;
                    let p = 1.0 / (1.0 + (-e).exp());
                    *g = yi - p;
                }
            }
        }
        if let Some(i) = l.beta0 {
            grad[i] += g_eta.iter().sum::<f64>();
        }
        let g_beta = self.data.design.tr_mul(&g_eta);

        // Chain rule through β_j = z_j λ̃_j τ.
        let mut g_log_tau = 0.0;
        let mut g_log_c2 = 0.0;
        for j in 0..d {
            grad[j] += g_beta[j] * fw.lambda_tilde[j] * fw.tau;
            let h = g_beta[j] * fw.beta[j];
            let g_log_lambda = h * fw.q[j];
            g_log_tau += g_log_lambda;
            g_log_c2 += 0.5 * h * (1.0 - fw.q[j]);
            if let Some(s) = l.local {
                grad[s + j] += g_log_lambda;
                if let Some(m) = l.local_mix {
                    grad[m + j] += 0.5 * g_log_lambda;
                }
            }
        }
        if let Some(i) = l.tau {
            grad[i] += g_log_tau;
            if let Some(k) = l.tau_mix {
                grad[k] += 0.5 * g_log_tau;
            }
        }
        if let Some(i) = l.c2 {
            grad[i] += g_log_c2;
        }
        if prior.tau_scaled_by_sigma {
            if let Some(i) = l.sigma {
                grad[i] += g_log_tau;
            }
        }
        lp
    }
}

impl LogDensity for GlmModel {
    #[allow(clippy::misnamed_getters)]
    fn dim(&self) -> usize {
        self.layout.len
    }

    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> std::result::Result<f64, Rejection> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Rejection);
        }
        let lp = self.evaluate(x, grad);
        if lp.is_finite() && grad.iter().all(|g| g.is_finite()) {
            Ok(lp)
        } else {
            Err(Rejection)
        }
    }
}
