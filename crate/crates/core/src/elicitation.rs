//! Prior elicitation through the effective number of nonzero coefficients.
//!
//! A hyperprior for the global scale `τ` is judged by the distribution it
//! induces on `m_eff = Σ_j (1 − κ_j)`. Draws are generated in fixed-size
//! blocks, each with its own RNG stream derived from `(seed, block)`, so the
//! output does not depend on how many worker threads run the blocks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::shrinkage::{meff_moments, ShrinkageContext};

const BLOCK: usize = 512;

/// Hyperprior on the global scale `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauPrior {
    Fixed { tau: f64 },
    HalfNormal { scale: f64 },
    HalfCauchy { scale: f64 },
    HalfStudentT { dof: f64, scale: f64 },
}

impl TauPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TauPrior::Fixed { tau } => ensure_positive("fixed tau", tau),
            TauPrior::HalfNormal { scale } | TauPrior::HalfCauchy { scale } => {
                ensure_positive("tau prior scale", scale)
            }
            TauPrior::HalfStudentT { dof, scale } => {
                ensure_positive("tau prior dof", dof)?;
                ensure_positive("tau prior scale", scale)
            }
        }
    }

    /// The scale parameter (the value itself for `Fixed`).
    pub fn scale(&self) -> f64 {
        match *self {
            TauPrior::Fixed { tau } => tau,
            TauPrior::HalfNormal { scale } | TauPrior::HalfCauchy { scale } | TauPrior::HalfStudentT { scale, .. } => {
                scale
            }
        }
    }

    /// Same family with the scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> TauPrior {
        match *self {
            TauPrior::Fixed { tau } => TauPrior::Fixed { tau: tau * factor },
            TauPrior::HalfNormal { scale } => TauPrior::HalfNormal { scale: scale * factor },
            TauPrior::HalfCauchy { scale } => TauPrior::HalfCauchy { scale: scale * factor },
            TauPrior::HalfStudentT { dof, scale } => TauPrior::HalfStudentT { dof, scale: scale * factor },
        }
    }

    /// Degrees of freedom of the half-t family; `None` for fixed and half-normal.
    pub fn dof(&self) -> Option<f64> {
        match *self {
            TauPrior::HalfCauchy { .. } => Some(1.0),
            TauPrior::HalfStudentT { dof, .. } => Some(dof),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TauPrior::Fixed { tau } => tau,
            TauPrior::HalfNormal { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                scale * z.abs()
            }
            TauPrior::HalfCauchy { scale } => scale * sample_half_t(1.0, rng),
            TauPrior::HalfStudentT { dof, scale } => scale * sample_half_t(dof, rng),
        }
    }
}

/// Standard half-Student-t draw as `|N(0,1)| / sqrt(χ²_ν / ν)`.
pub fn sample_half_t<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let chi2 = ChiSquared::new(dof).expect("positive degrees of freedom").sample(rng);
    z.abs() / (chi2 / dof).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MeffSource {
    Prior { context: ShrinkageContext, tau_prior: TauPrior, local_dof: f64, seed: u64 },
    Posterior,
}

/// Draws of the effective number of nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeffDraws {
    pub values: Vec<f64>,
    pub dim: usize,
    pub source: MeffSource,
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64 + 1);
    rng
}

/// Monte Carlo draws of `m_eff` under the prior: `τ ~ tau_prior`, `λ_j ~ half-t(local_dof)`.
pub fn sample_meff_prior(
    tau_prior: &TauPrior,
    local_dof: f64,
    ctx: &ShrinkageContext,
    n_draws: usize,
    seed: u64,
) -> Result<MeffDraws> {
    tau_prior.validate()?;
    ensure_positive("local dof", local_dof)?;
    if n_draws == 0 {
        return Err(Error::Empty("n_draws must be at least 1"));
    }
    // Canonical order: the draws depend only on the multiset of scales.
    let mut unit_a: Vec<f64> = (0..ctx.dim()).map(|j| ctx.a(1.0, j)).collect();
    unit_a.sort_by(f64::total_cmp);

    let n_blocks = n_draws.div_ceil(BLOCK);
    let values: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK.min(n_draws - b * BLOCK);
            let unit_a = &unit_a;
            (0..len)
                .map(|_| {
                    let tau = tau_prior.sample(&mut rng);
                    unit_a
                        .iter()
                        .map(|&a1| {
                            let al = a1 * tau * sample_half_t(local_dof, &mut rng);
                            let al2 = al * al;
                            if al2.is_infinite() {
                                1.0
                            } else {
                                al2 / (1.0 + al2)
                            }
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(MeffDraws {
        values,
        dim: ctx.dim(),
        source: MeffSource::Prior { context: ctx.clone(), tau_prior: *tau_prior, local_dof, seed },
    })
}

/// `E[1 − κ]` for one coordinate with `a = τ σ⁻¹ √n s_j` and `λ ~ half-t(dof)`.
///
/// Integrated over `u = log λ` with the trapezoid rule, which converges
/// geometrically for this smooth, exponentially decaying integrand.
pub fn expected_inclusion(a: f64, dof: f64) -> f64 {
    if dof == 1.0 {
        return a / (1.0 + a);
    }
    use statrs::function::gamma::ln_gamma;
    let log_norm = std::f64::consts::LN_2 + ln_gamma((dof + 1.0) / 2.0)
        - ln_gamma(dof / 2.0)
        - 0.5 * (dof * std::f64::consts::PI).ln();
    let log_a = a.ln();
    // Center the grid between the density bulk (u ≈ 0) and the sigmoid step (u ≈ −log a).
    let lo = (-log_a).min(0.0) - 40.0;
    let hi = (-log_a).max(0.0) + 40.0 / dof.min(1.0);
    let h = 0.01;
    let steps = ((hi - lo) / h).ceil() as usize;
    let mut total = 0.0;
    for i in 0..=steps {
        let u = lo + i as f64 * h;
        let l2 = (2.0 * u).exp();
        let log_dens = log_norm - 0.5 * (dof + 1.0) * (l2 / dof).ln_1p() + u;
        let x = 2.0 * (u + log_a);
        let incl = 1.0 / (1.0 + (-x).exp());
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        total += w * incl * log_dens.exp();
    }
    total * h
}

/// `E[m_eff | τ]` with half-t(dof) local scales.
pub fn expected_meff(tau: f64, local_dof: f64, ctx: &ShrinkageContext) -> Result<f64> {
    ensure_positive("tau", tau)?;
    ensure_positive("local dof", local_dof)?;
    if local_dof == 1.0 {
        return Ok(meff_moments(tau, ctx)?.0);
    }
    let mut total = 0.0;
    let mut last: Option<(f64, f64)> = None;
    for j in 0..ctx.dim() {
        let a = ctx.a(tau, j);
        let value = match last {
            Some((prev_a, v)) if prev_a == a => v,
            _ => expected_inclusion(a, local_dof),
        };
        last = Some((a, value));
        total += value;
    }
    Ok(total)
}

/// Solves `E[m_eff | τ] = p0` for `τ` by bisection on `log τ`.
///
/// The bracket is `[1e-8, 1e4] · σ/√n`; `E[m_eff]` is increasing in `τ`.
pub fn solve_tau_for_meff(p0: f64, local_dof: f64, ctx: &ShrinkageContext) -> Result<f64> {
    ensure_positive("p0", p0)?;
    ensure_positive("local dof", local_dof)?;
    if p0 >= ctx.dim() as f64 {
        return Err(Error::PriorGuessTooLarge { p0, dim: ctx.dim() });
    }
    let unit = ctx.sigma() / (ctx.n() as f64).sqrt();
    let (mut lo, mut hi) = ((1e-8 * unit).ln(), (1e4 * unit).ln());
    let f = |log_tau: f64| expected_meff(log_tau.exp(), local_dof, ctx).map(|m| m - p0);
    if f(hi)? < 0.0 {
        return Err(Error::BracketFailure { target: p0, tau_max: hi.exp() });
    }
    if f(lo)? > 0.0 {
        return Err(Error::BracketFailure { target: p0, tau_max: lo.exp() });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeffSummary {
    pub draws: usize,
    pub mean: f64,
    pub sd: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Mean, standard deviation, quantiles, and a histogram over `[0, D]` with
/// `bins` bins (default `min(50, D + 1)`).
pub fn summarize_meff(draws: &MeffDraws, quantiles: &[f64], bins: Option<usize>) -> Result<MeffSummary> {
    let v = &draws.values;
    if v.is_empty() {
        return Err(Error::Empty("m_eff draws"));
    }
    if let Some(q) = quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Domain(format!("quantile {q} outside [0, 1]")));
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = quantiles.iter().map(|&q| (q, quantile_sorted(&sorted, q))).collect();

    let bins = bins.unwrap_or_else(|| 50.min(draws.dim + 1)).max(1);
    let width = draws.dim as f64 / bins as f64;
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &x in v {
        let i = ((x / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[i] += 1;
    }
    Ok(MeffSummary { draws: v.len(), mean, sd, quantiles, histogram: Histogram { edges, counts } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkage::tau_reference;
    use approx::assert_relative_eq;

    fn ctx(n: usize, dim: usize) -> ShrinkageContext {
        ShrinkageContext::new(n, dim, 1.0).unwrap()
    }

    #[test]
    fn fixed_tau0_centers_on_p0() {
        let c = ctx(100, 10);
        let tau0 = tau_reference(5.0, &c).unwrap();
        let d = sample_meff_prior(&TauPrior::Fixed { tau: tau0 }, 1.0, &c, 10_000, 7).unwrap();
        let s = summarize_meff(&d, &[0.5], None).unwrap();
        let se = s.sd / (s.draws as f64).sqrt();
        assert!((s.mean - 5.0).abs() < 3.0 * se, "mean {} se {}", s.mean, se);
        assert!(d.values.iter().all(|&m| (0.0..=10.0).contains(&m)));
    }

    #[test]
    fn determinism_and_single_draw() {
        let c = ctx(100, 10);
        let p = TauPrior::HalfCauchy { scale: 1.0 };
        let a = sample_meff_prior(&p, 1.0, &c, 1, 42).unwrap();
        let b = sample_meff_prior(&p, 1.0, &c, 1, 42).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values.len(), 1);
        assert!(sample_meff_prior(&p, 1.0, &c, 0, 42).is_err());
    }

    #[test]
    fn thread_count_does_not_change_draws() {
        let c = ctx(50, 20);
        let p = TauPrior::HalfNormal { scale: 0.05 };
        let many = sample_meff_prior(&p, 1.0, &c, 3000, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| sample_meff_prior(&p, 1.0, &c, 3000, 3).unwrap());
        assert_eq!(many.values, one.values);
    }

    #[test]
    fn closed_form_solver_matches_reference() {
        let c = ctx(100, 10);
        let t = solve_tau_for_meff(5.0, 1.0, &c).unwrap();
        assert_relative_eq!(t, 0.1, max_relative = 1e-6);
        let c = ctx(200, 1000);
        let t = solve_tau_for_meff(5.0, 1.0, &c).unwrap();
        assert_relative_eq!(t, tau_reference(5.0, &c).unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn solver_rejects_and_reports_bracket_failure() {
        let c = ctx(100, 10);
        assert!(matches!(solve_tau_for_meff(10.0, 1.0, &c), Err(Error::PriorGuessTooLarge { .. })));
        assert!(matches!(solve_tau_for_meff(10.0 - 1e-6, 1.0, &c), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn expected_inclusion_matches_cauchy_closed_form() {
        // The quadrature path evaluated at dof = 1 + tiny must approach a/(1+a).
        for &a in &[1e-4, 0.01, 1.0, 50.0] {
            let q = expected_inclusion(a, 1.0 + 1e-9);
            assert_relative_eq!(q, a / (1.0 + a), max_relative = 1e-6);
        }
    }

    #[test]
    fn summary_basics() {
        let d = MeffDraws { values: vec![5.0; 100], dim: 10, source: MeffSource::Posterior };
        let s = summarize_meff(&d, &[0.1, 0.5, 0.9], None).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.histogram.counts.len(), 11);
        assert_eq!(s.histogram.counts.iter().sum::<usize>(), 100);
        let empty = MeffDraws { values: vec![], dim: 10, source: MeffSource::Posterior };
        assert!(summarize_meff(&empty, &[0.5], None).is_err());
        assert!(summarize_meff(&d, &[1.5], None).is_err());
    }

    #[test]
    fn summary_of_uniform_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>() * 10.0).collect();
        let d = MeffDraws { values, dim: 10, source: MeffSource::Posterior };
        let s = summarize_meff(&d, &[0.1, 0.5, 0.9], Some(10)).unwrap();
        let se = (100.0f64 / 12.0).sqrt() / (20_000f64).sqrt();
        assert!((s.mean - 5.0).abs() < 3.0 * se);
        assert!(s.quantiles[0].1 < s.quantiles[1].1 && s.quantiles[1].1 < s.quantiles[2].1);
    }
}
