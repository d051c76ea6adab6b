//! Closed-form quantities of the horseshoe family of priors.
//!
//! Everything here assumes the uncorrelated-design approximation
//! `XᵀX ≈ n·diag(s²)`, under which the posterior mean of coefficient `j`
//! is `(1 − κ_j)·β̂_j` with the shrinkage factor
//! `κ_j = 1 / (1 + n σ⁻² τ² s_j² λ_j²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Problem dimensions and noise level that enter every shrinkage formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageContext {
    n: usize,
    sigma: f64,
    scales: Vec<f64>,
}

impl ShrinkageContext {
    /// Context with unit predictor scales.
    pub fn new(n: usize, dim: usize, sigma: f64) -> Result<Self> {
        Self::with_scales(n, sigma, vec![1.0; dim])
    }

    pub fn with_scales(n: usize, sigma: f64, scales: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("observation count must be at least 1".into()));
        }
        if scales.is_empty() {
            return Err(Error::Domain("predictor count must be at least 1".into()));
        }
        ensure_positive("sigma", sigma)?;
        for (j, &s) in scales.iter().enumerate() {
            ensure_positive(&format!("scale s_{j}"), s)?;
        }
        Ok(Self { n, sigma, scales })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::with_scales(self.n, sigma, self.scales.clone())
    }

    /// `a_j = τ σ⁻¹ √n s_j`.
    pub fn a(&self, tau: f64, j: usize) -> f64 {
        tau / self.sigma * (self.n as f64).sqrt() * self.scales[j]
    }

    /// `n σ⁻² s_j²`, the data precision carried by coefficient `j`.
    pub fn precision(&self, j: usize) -> f64 {
        let s = self.scales[j];
        self.n as f64 * s * s / (self.sigma * self.sigma)
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j < self.dim() {
            Ok(())
        } else {
            Err(Error::Domain(format!("predictor index {j} out of range 0..{}", self.dim())))
        }
    }
}

/// Slab that regularizes the largest coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlabSpec {
    /// No slab: the original horseshoe.
    Infinite,
    FixedScale {
        c: f64,
    },
    /// `c² ~ Inv-Gamma(alpha, beta)`; `alpha = ν/2, beta = ν s²/2` gives a Student-t slab.
    InverseGammaOnCSquared {
        alpha: f64,
        beta: f64,
    },
}

impl SlabSpec {
    /// The inverse-gamma slab equivalent to a Student-t with `df` degrees of freedom and scale `scale`.
    pub fn student_t(df: f64, scale: f64) -> Self {
        SlabSpec::InverseGammaOnCSquared { alpha: df / 2.0, beta: df * scale * scale / 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SlabSpec::Infinite => Ok(()),
            SlabSpec::FixedScale { c } => ensure_positive("slab scale c", c),
            SlabSpec::InverseGammaOnCSquared { alpha, beta } => {
                ensure_positive("slab alpha", alpha)?;
                ensure_positive("slab beta", beta)
            }
        }
    }
}

/// Observation family with its canonical (or conventional) link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GlmFamily {
    Gaussian,
    BinomialLogit,
    PoissonLog,
    /// Gamma with inverse link; `alpha` is the shape, `Var(y) = μ²/α`.
    GammaInverse {
        alpha: f64,
    },
    /// Inverse Gaussian with inverse-squared link; `Var(y) = μ³/λ`.
    InverseGaussianInvSq {
        lambda: f64,
    },
}

impl GlmFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GlmFamily::GammaInverse { alpha } => ensure_positive("gamma shape", alpha),
            GlmFamily::InverseGaussianInvSq { lambda } => ensure_positive("inverse-gaussian shape", lambda),
            _ => Ok(()),
        }
    }
}

/// `κ_j = 1 / (1 + n σ⁻² τ² s_j² λ²)`.
pub fn shrinkage_factor(tau: f64, lambda: f64, ctx: &ShrinkageContext, j: usize) -> Result<f64> {
    ensure_positive("tau", tau)?;
    ensure_positive("lambda", lambda)?;
    ctx.check_index(j)?;
    let a = ctx.a(tau, j) * lambda;
    Ok(1.0 / (1.0 + a * a))
}

/// Prior density of `κ` under a half-Cauchy local scale, with `a = τ σ⁻¹ √n s_j`.
pub fn kappa_prior_density(kappa: f64, a: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    ensure_positive("a", a)?;
    Ok(a / (PI * ((a * a - 1.0) * kappa + 1.0)) / (kappa.sqrt() * (1.0 - kappa).sqrt()))
}

/// Prior mean and variance of `κ` given `a`.
pub fn kappa_moments(a: f64) -> Result<(f64, f64)> {
    ensure_positive("a", a)?;
    let mean = 1.0 / (1.0 + a);
    let var = a / (2.0 * (1.0 + a) * (1.0 + a));
    Ok((mean, var))
}

/// Prior mean and variance of `m_eff` given `τ` (half-Cauchy locals).
pub fn meff_moments(tau: f64, ctx: &ShrinkageContext) -> Result<(f64, f64)> {
    ensure_positive("tau", tau)?;
    let (mut mean, mut var) = (0.0, 0.0);
    for j in 0..ctx.dim() {
        let a = ctx.a(tau, j);
        mean += a / (1.0 + a);
        var += a / (2.0 * (1.0 + a) * (1.0 + a));
    }
    Ok((mean, var))
}

/// `m_eff = Σ_j (1 − κ_j)`.
pub fn meff_from_kappas(kappas: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (j, &k) in kappas.iter().enumerate() {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain(format!("kappa_{j} = {k} outside [0, 1]")));
        }
        total += 1.0 - k;
    }
    Ok(total)
}

fn check_prior_guess(p0: f64, dim: usize) -> Result<()> {
    ensure_positive("p0", p0)?;
    if p0 >= dim as f64 {
        return Err(Error::PriorGuessTooLarge { p0, dim });
    }
    Ok(())
}

/// `τ₀ = p₀/(D − p₀) · σ/√n`, the value at which `E[m_eff | τ] = p₀`.
pub fn tau_reference(p0: f64, ctx: &ShrinkageContext) -> Result<f64> {
    check_prior_guess(p0, ctx.dim())?;
    Ok(p0 / (ctx.dim() as f64 - p0) * ctx.sigma() / (ctx.n() as f64).sqrt())
}

/// `τ₀` for the identity design (`X = I`, one observation per coefficient).
pub fn tau_reference_identity(p0: f64, dim: usize, sigma: f64) -> Result<f64> {
    check_prior_guess(p0, dim)?;
    ensure_positive("sigma", sigma)?;
    Ok(p0 / (dim as f64 - p0) * sigma)
}

/// Regularized local scale `λ̃ = sqrt(c²λ² / (c² + τ²λ²))`.
///
/// An infinite `c` returns `λ` unchanged.
pub fn lambda_tilde(lambda: f64, tau: f64, c: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_positive("tau", tau)?;
    if c == f64::INFINITY {
        return Ok(lambda);
    }
    ensure_positive("c", c)?;
    let t = tau * lambda / c;
    Ok(lambda / (1.0 + t * t).sqrt())
}

/// Local scale whose shrinkage profile is exactly the horseshoe profile
/// shifted from `(0, 1)` to `(b_j, 1)`.
pub fn lambda_tilde_exact(lambda: f64, tau: f64, c: f64, ctx: &ShrinkageContext, j: usize) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_positive("tau", tau)?;
    ensure_positive("c", c)?;
    ctx.check_index(j)?;
    let extra = 1.0 / ctx.precision(j);
    Ok(c * lambda / (extra + c * c + tau * tau * lambda * lambda).sqrt())
}

fn check_slab_width(c: f64) -> Result<()> {
    if c > 0.0 && !c.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("slab width must be positive, got {c}")))
    }
}

/// `b_j = 1 / (1 + n σ⁻² s_j² c²)`, the lower end of the regularized shrinkage profile.
pub fn slab_shift(ctx: &ShrinkageContext, c: f64, j: usize) -> Result<f64> {
    check_slab_width(c)?;
    ctx.check_index(j)?;
    Ok(1.0 / (1.0 + ctx.precision(j) * c * c))
}

/// Effective complexity of the regularized horseshoe, `(1 − b)·m_eff`.
pub fn meff_regularized(meff: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("slab shift must lie in [0, 1], got {b}")));
    }
    if meff < 0.0 || !meff.is_finite() {
        return Err(Error::Domain(format!("m_eff must be non-negative, got {meff}")));
    }
    Ok((1.0 - b) * meff)
}

/// Pseudo-variance `σ̃² = −1/L''` of one observation at mean `mu`.
///
/// `dispersion` is the noise variance `σ²` for the Gaussian family; other
/// families carry their dispersion in the [`GlmFamily`] variant and ignore it.
pub fn pseudo_variance(family: &GlmFamily, mu: f64, dispersion: f64) -> Result<f64> {
    family.validate()?;
    let domain = |ok: bool, what: &str| {
        if ok && mu.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("mean {mu} outside the {what} domain")))
        }
    };
    match *family {
        GlmFamily::Gaussian => {
            ensure_positive("gaussian variance", dispersion)?;
            Ok(dispersion)
        }
        GlmFamily::BinomialLogit => {
            domain(mu > 0.0 && mu < 1.0, "binomial")?;
            Ok(1.0 / (mu * (1.0 - mu)))
        }
        GlmFamily::PoissonLog => {
            domain(mu > 0.0, "poisson")?;
            Ok(1.0 / mu)
        }
        GlmFamily::GammaInverse { alpha } => {
            domain(mu > 0.0, "gamma")?;
            Ok(1.0 / (mu * mu * alpha))
        }
        GlmFamily::InverseGaussianInvSq { lambda } => {
            domain(mu > 0.0, "inverse gaussian")?;
            Ok(4.0 / (mu * mu * mu * lambda))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShrinkageAtom {
    pub kappa: f64,
    pub weight: f64,
}

/// Shrinkage profile of a spike-and-slab prior with slab width `c` and inclusion probability `pi`:
/// mass `pi` at the slab shift `b_j` and `1 − pi` at complete shrinkage.
pub fn spike_slab_profile(c: f64, pi: f64, ctx: &ShrinkageContext, j: usize) -> Result<[ShrinkageAtom; 2]> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::Domain(format!("inclusion probability must lie in [0, 1], got {pi}")));
    }
    let b = slab_shift(ctx, c, j)?;
    Ok([ShrinkageAtom { kappa: b, weight: pi }, ShrinkageAtom { kappa: 1.0, weight: 1.0 - pi }])
}

/// Exact Gaussian conditional posterior of `β` given `(λ, τ, σ)` in the
/// linear model without intercept.
///
/// Uses the precision form `Σ = (τ⁻²Λ⁻¹ + σ⁻²XᵀX)⁻¹`, `mean = Σ σ⁻² Xᵀy`,
/// which stays defined when `D > n`.
pub fn conditional_posterior_beta(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambdas: &[f64],
    tau: f64,
    sigma: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (n, dim) = x.shape();
    if y.len() != n || lambdas.len() != dim {
        return Err(Error::Domain(format!(
            "shape mismatch: X is {n}x{dim}, y has {}, lambdas has {}",
            y.len(),
            lambdas.len()
        )));
    }
    ensure_positive("tau", tau)?;
    ensure_positive("sigma", sigma)?;
    let inv_noise = 1.0 / (sigma * sigma);
    let mut precision = x.tr_mul(x) * inv_noise;
    for (j, &l) in lambdas.iter().enumerate() {
        ensure_positive("lambda", l)?;
        precision[(j, j)] += 1.0 / (tau * tau * l * l);
    }
    let rhs = x.tr_mul(y) * inv_noise;
    let chol = precision.clone().cholesky().ok_or_else(|| {
        let eig = precision.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        Error::Singular(format!(
            "posterior precision not positive definite (eigenvalues in [{lo:e}, {hi:e}], condition {:e})",
            hi.abs() / lo.abs()
        ))
    })?;
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite posterior moments".into()));
    }
    Ok((mean, cov))
}
