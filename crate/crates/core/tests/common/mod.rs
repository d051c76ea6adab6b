#![allow(dead_code)]

use std::f64::consts::PI;

use horseshoe::elicitation::{sample_meff_prior, TauPrior};
use horseshoe::model::{fit, Dataset, Design, GlmModel, InterceptPrior, NoisePrior, PriorSpec};
use horseshoe::sampler::hamiltonian::{trajectory_energies, PhasePoint};
use horseshoe::sampler::{compute_ess, run_chains, run_chains_with_diagnostics, LogDensity, Rejection, SamplerConfig};
use horseshoe::shrinkage::{
    conditional_posterior_beta, kappa_prior_density, lambda_tilde_exact, pseudo_variance, slab_shift, GlmFamily,
    ShrinkageContext, SlabSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct StdNormal(pub usize);

impl LogDensity for StdNormal {
    fn dim(&self) -> usize {
        self.0
    }
    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, Rejection> {
        let mut lp = 0.0;
        for (g, &v) in grad.iter_mut().zip(x) {
            *g = -v;
            lp -= 0.5 * v * v;
        }
        Ok(lp)
    }
}

/// Neal's funnel: `v ~ N(0, 3²)`, `x_i | v ~ N(0, e^v)`.
pub struct Funnel(pub usize);

impl LogDensity for Funnel {
    fn dim(&self) -> usize {
        self.0 + 1
    }
    fn log_density_and_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, Rejection> {
        let v = x[0];
        let mut lp = -v * v / 18.0;
        grad[0] = -v / 9.0;
        let inv = (-v).exp();
        for i in 1..x.len() {
            lp += -0.5 * v - 0.5 * x[i] * x[i] * inv;
            grad[i] = -x[i] * inv;
            grad[0] += -0.5 + 0.5 * x[i] * x[i] * inv;
        }
        Ok(lp)
    }
}

/// Standard normal design with a response driven by the first two columns.
pub fn dataset(family: GlmFamily, n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|i| {
            let f = x[(i, 0)] - 0.5 * x[(i, 1)];
            match family {
                GlmFamily::Gaussian => f + 0.3 * rng.sample::<f64, _>(StandardNormal),
                _ => f64::from(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-f).exp()))),
            }
        })
        .collect();
    Dataset::new(Design::Dense(x), y, family).unwrap()
}

pub fn slabs() -> [(&'static str, SlabSpec); 3] {
    [
        ("hs", SlabSpec::Infinite),
        ("rhs-fixed", SlabSpec::FixedScale { c: 1.5 }),
        ("rhs-invgamma", SlabSpec::student_t(4.0, 2.0)),
    ]
}

/// Largest `|fd − g| / max(|g|, 1)` over coordinates at a random point,
/// with central differences of step `1e-5`.
pub fn max_relative_gradient_error(model: &GlmModel, rng: &mut ChaCha8Rng) -> f64 {
    let dim = model.dim();
    let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
    let mut grad = vec![0.0; dim];
    model.log_density_and_grad(&x, &mut grad).unwrap();
    let mut scratch = vec![0.0; dim];
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let mut xp = x.clone();
        xp[i] += h;
        let mut xm = x.clone();
        xm[i] -= h;
        let fp = model.log_density_and_grad(&xp, &mut scratch).unwrap();
        let fm = model.log_density_and_grad(&xm, &mut scratch).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
    }
    worst
}

/// Worst gradient error over 20 random points for each family and slab.
pub fn gradient_suite(parameterizations: &[horseshoe::model::Parameterization]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for family in [GlmFamily::Gaussian, GlmFamily::BinomialLogit] {
        for (_, slab) in slabs() {
            for &parameterization in parameterizations {
                let mut prior = PriorSpec::new(TauPrior::HalfStudentT { dof: 3.0, scale: 0.3 }, 1.0, slab, family);
                prior.parameterization = parameterization;
                let model = GlmModel::new(dataset(family, 25, 6, 1), prior).unwrap();
                for _ in 0..20 {
                    worst = worst.max(max_relative_gradient_error(&model, &mut rng));
                }
            }
        }
    }
    worst
}

/// `∫₀¹ p(κ | a) dκ` by the midpoint rule after substituting `κ = sin²θ`,
/// which removes both endpoint singularities and leaves a smooth periodic
/// integrand.
pub fn kappa_density_integral(a: f64) -> f64 {
    let m = 200_000;
    let h = 0.5 * PI / m as f64;
    (0..m)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            let (s, c) = t.sin_cos();
            kappa_prior_density(s * s, a).unwrap() * 2.0 * s * c
        })
        .sum::<f64>()
        * h
}

/// Sample mean and variance of `v` with their standard errors.
pub struct Moments {
    pub mean: f64,
    pub mean_se: f64,
    pub var: f64,
    pub var_se: f64,
}

pub fn moments(v: &[f64]) -> Moments {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sq: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    let var = sq.iter().sum::<f64>() / (n - 1.0);
    let var_of_sq = sq.iter().map(|s| (s - var).powi(2)).sum::<f64>() / (n - 1.0);
    Moments { mean, mean_se: (var / n).sqrt(), var, var_se: (var_of_sq / n).sqrt() }
}

/// Monte Carlo draws of `κ = 1/(1 + a²λ²)` with `λ ~ C⁺(0, 1)` by inverse CDF.
pub fn kappa_draws(a: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let lambda = (0.5 * PI * rng.random::<f64>()).tan();
            1.0 / (1.0 + a * a * lambda * lambda)
        })
        .collect()
}

/// Monte Carlo moments of prior `m_eff` draws at fixed `τ`.
pub fn meff_draw_moments(tau: f64, ctx: &ShrinkageContext, n: usize, seed: u64) -> Moments {
    let draws = sample_meff_prior(&TauPrior::Fixed { tau }, 1.0, ctx, n, seed).unwrap();
    moments(&draws.values)
}

/// Largest deviation from `κ̃ = (1 − b)κ + b` over a grid of contexts and scales.
pub fn shifted_profile_max_error() -> f64 {
    let mut worst: f64 = 0.0;
    for &(n, sigma, s) in &[(10usize, 1.0, 1.0), (100, 2.0, 0.5), (1, 0.3, 3.0)] {
        let ctx = ShrinkageContext::with_scales(n, sigma, vec![s]).unwrap();
        let p = ctx.precision(0);
        for &c in &[0.1, 1.0, 2.5, 40.0] {
            let b = slab_shift(&ctx, c, 0).unwrap();
            for &tau in &[1e-3, 0.05, 0.7, 4.0] {
                for &lambda in &[1e-2, 0.3, 1.0, 8.0, 500.0] {
                    let lt = lambda_tilde_exact(lambda, tau, c, &ctx, 0).unwrap();
                    let kappa_tilde = 1.0 / (1.0 + p * tau * tau * lt * lt);
                    let kappa = 1.0 / (1.0 + p * tau * tau * lambda * lambda);
                    worst = worst.max((kappa_tilde - ((1.0 - b) * kappa + b)).abs());
                }
            }
        }
    }
    worst
}

/// Observation log-likelihood as a function of the linear predictor `η`,
/// evaluated at `y = μ`.
fn log_lik(family: &GlmFamily, mu: f64, eta: f64) -> f64 {
    let y = mu;
    match *family {
        GlmFamily::BinomialLogit => y * eta - eta.exp().ln_1p(),
        GlmFamily::PoissonLog => y * eta - eta.exp(),
        // η = 1/μ.
        GlmFamily::GammaInverse { alpha } => alpha * eta.ln() - alpha * y * eta,
        // η = 1/μ².
        GlmFamily::InverseGaussianInvSq { lambda } => -0.5 * lambda * y * eta + lambda * eta.sqrt(),
        GlmFamily::Gaussian => -0.5 * (y - eta).powi(2),
    }
}

fn link(family: &GlmFamily, mu: f64) -> f64 {
    match family {
        GlmFamily::BinomialLogit => (mu / (1.0 - mu)).ln(),
        GlmFamily::PoissonLog => mu.ln(),
        GlmFamily::GammaInverse { .. } => 1.0 / mu,
        GlmFamily::InverseGaussianInvSq { .. } => 1.0 / (mu * mu),
        GlmFamily::Gaussian => mu,
    }
}

/// Largest relative gap between `pseudo_variance` and `−1/L''(η)` from
/// central second differences of the exact log-likelihood.
pub fn pseudo_variance_fd_max_error() -> f64 {
    let cases: [(GlmFamily, &[f64]); 4] = [
        (GlmFamily::BinomialLogit, &[0.05, 0.3, 0.5, 0.8, 0.97]),
        (GlmFamily::PoissonLog, &[0.2, 1.0, 4.0, 30.0]),
        (GlmFamily::GammaInverse { alpha: 2.5 }, &[0.3, 1.0, 5.0]),
        (GlmFamily::InverseGaussianInvSq { lambda: 1.7 }, &[0.4, 1.0, 3.0]),
    ];
    let mut worst: f64 = 0.0;
    for (family, mus) in cases {
        for &mu in mus {
            let eta = link(&family, mu);
            let h = 1e-4 * eta.abs().max(1.0);
            let d2 = (log_lik(&family, mu, eta + h) - 2.0 * log_lik(&family, mu, eta) + log_lik(&family, mu, eta - h))
                / (h * h);
            let fd = -1.0 / d2;
            let exact = pseudo_variance(&family, mu, 1.0).unwrap();
            worst = worst.max((fd - exact).abs() / exact);
        }
    }
    worst
}

/// Posterior moments of `β` for the linear model with clamped `λ`, `τ`
/// and `σ`: MCMC estimates expressed as z-scores against the exact
/// conditional posterior, `(mean z, sd z)` per coefficient.
pub fn oracle_z_scores(seed: u64) -> Vec<(f64, f64)> {
    let (n, d) = (50, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let truth = [1.5, -0.8, 0.0, 0.3, 0.0];
    let (tau, sigma) = (0.6, 0.9);
    let lambdas = vec![2.0, 0.5, 1.0, 0.2, 3.0];
    let y: Vec<f64> = (0..n)
        .map(|i| (0..d).map(|j| x[(i, j)] * truth[j]).sum::<f64>() + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let (mean, cov) = conditional_posterior_beta(&x, &DVector::from_vec(y.clone()), &lambdas, tau, sigma).unwrap();

    let mut prior = PriorSpec::new(TauPrior::Fixed { tau }, 1.0, SlabSpec::Infinite, GlmFamily::Gaussian);
    prior.tau_scaled_by_sigma = false;
    prior.intercept = InterceptPrior::Excluded;
    prior.noise = NoisePrior::Fixed { sigma };
    prior.fixed_lambdas = Some(lambdas);
    let model = GlmModel::new(Dataset::new(Design::Dense(x), y, GlmFamily::Gaussian).unwrap(), prior).unwrap();
    let config = SamplerConfig { chains: 4, warmup: 500, samples: 2000, seed: seed + 1, ..SamplerConfig::default() };
    let fitted = fit(&model, &config).unwrap();
    (0..d)
        .map(|j| {
            let chains = fitted.draws.series(|dr| dr.beta[j]);
            let ess = compute_ess(&chains).unwrap();
            let all: Vec<f64> = chains.concat();
            let m = moments(&all);
            let sd = m.var.sqrt();
            let exact_sd = cov[(j, j)].sqrt();
            let z_mean = (m.mean - mean[j]) / (exact_sd / ess.sqrt());
            let z_sd = (sd - exact_sd) / (exact_sd / (2.0 * ess).sqrt());
            (z_mean, z_sd)
        })
        .collect()
}

/// Maximum over coordinates of `|mean|/(sd/√ESS)` and `|sd − 1|` for a
/// 10-dimensional standard normal, plus the divergence fraction and max R̂.
pub struct NormalRecovery {
    pub worst_mean_z: f64,
    pub worst_sd_error: f64,
    pub max_rhat: f64,
    pub divergence_fraction: f64,
}

pub fn normal_recovery(seed: u64) -> NormalRecovery {
    let config = SamplerConfig { seed, ..SamplerConfig::default() };
    let (out, diag) = run_chains_with_diagnostics(&StdNormal(10), None, &config).unwrap();
    let mut r = NormalRecovery {
        worst_mean_z: 0.0,
        worst_sd_error: 0.0,
        max_rhat: diag.max_rhat(),
        divergence_fraction: diag.divergence_fraction,
    };
    for i in 0..10 {
        let chains = out.coordinate(i);
        let m = moments(&chains.concat());
        let ess = compute_ess(&chains).unwrap();
        r.worst_mean_z = r.worst_mean_z.max(m.mean.abs() / (m.var.sqrt() / ess.sqrt()));
        r.worst_sd_error = r.worst_sd_error.max((m.var.sqrt() - 1.0).abs());
    }
    r
}

/// Funnel divergence fractions at each target acceptance rate, averaged over seeds.
pub fn funnel_divergence_fractions(targets: &[f64], seeds: std::ops::Range<u64>) -> Vec<f64> {
    let count = seeds.end - seeds.start;
    targets
        .iter()
        .map(|&target_accept| {
            seeds
                .clone()
                .map(|seed| {
                    let config = SamplerConfig { target_accept, seed, ..SamplerConfig::default() };
                    run_chains(&Funnel(9), None, &config).unwrap().divergence_fraction()
                })
                .sum::<f64>()
                / count as f64
        })
        .collect()
}

/// Largest Hamiltonian drift along a 2000-step leapfrog trajectory at step `1e-4`.
pub fn leapfrog_energy_drift() -> f64 {
    let target = StdNormal(5);
    let mut start = PhasePoint::new(&target, vec![0.3, -1.2, 0.8, 2.0, -0.1]).unwrap();
    start.momentum = vec![1.0, 0.5, -0.7, 0.2, -1.5];
    let inv_mass = [1.0, 0.5, 2.0, 1.0, 0.8];
    let energies = trajectory_energies(&target, &start, &inv_mass, 1e-4, 2000).unwrap();
    let h0 = energies[0];
    energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max)
}
