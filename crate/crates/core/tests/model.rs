mod common;

use common::{dataset, max_relative_gradient_error, oracle_z_scores, slabs};
use horseshoe::elicitation::TauPrior;
use horseshoe::model::{
    half_t_log_density, Dataset, Design, GlmModel, InterceptPrior, NoisePrior, Parameterization, PriorSpec,
};
use horseshoe::sampler::LogDensity;
use horseshoe::shrinkage::{GlmFamily, SlabSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for family in [GlmFamily::Gaussian, GlmFamily::BinomialLogit] {
        for (name, slab) in slabs() {
            for parameterization in [Parameterization::NonCentered, Parameterization::ScaleMixture] {
                let mut prior = PriorSpec::new(TauPrior::HalfStudentT { dof: 3.0, scale: 0.3 }, 1.0, slab, family);
                prior.parameterization = parameterization;
                let model = GlmModel::new(dataset(family, 25, 6, 1), prior).unwrap();
                for _ in 0..20 {
                    let err = max_relative_gradient_error(&model, &mut rng);
                    assert!(err < 1e-6, "{family:?} {name} {parameterization:?}: {err}");
                }
            }
        }
    }
}

#[test]
fn gradients_cover_remaining_prior_options() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let variants = [
        (TauPrior::HalfNormal { scale: 0.5 }, 3.0, InterceptPrior::Normal { sd: 2.0 }, NoisePrior::LogUniform),
        (TauPrior::Fixed { tau: 0.2 }, 1.0, InterceptPrior::Excluded, NoisePrior::LogUniform),
        (TauPrior::HalfCauchy { scale: 1.0 }, 5.0, InterceptPrior::Flat, NoisePrior::Fixed { sigma: 0.8 }),
    ];
    for (tau_prior, dof, intercept, noise) in variants {
        for scaled in [true, false] {
            let mut prior = PriorSpec::new(tau_prior, dof, SlabSpec::student_t(3.0, 1.0), GlmFamily::Gaussian);
            prior.intercept = intercept;
            prior.noise = noise;
            prior.tau_scaled_by_sigma = scaled;
            let model = GlmModel::new(dataset(GlmFamily::Gaussian, 15, 4, 3), prior).unwrap();
            for _ in 0..10 {
                let err = max_relative_gradient_error(&model, &mut rng);
                assert!(err < 1e-6, "{tau_prior:?} scaled={scaled}: {err}");
            }
        }
    }
    let identity = Dataset::new(Design::Identity(5), vec![0.1, 3.0, -2.0, 0.0, 0.5], GlmFamily::Gaussian).unwrap();
    let mut prior = PriorSpec::new(TauPrior::Fixed { tau: 0.1 }, 1.0, SlabSpec::Infinite, GlmFamily::Gaussian);
    prior.intercept = InterceptPrior::Excluded;
    let model = GlmModel::new(identity, prior).unwrap();
    for _ in 0..10 {
        assert!(max_relative_gradient_error(&model, &mut rng) < 1e-6);
    }
}

#[test]
fn no_predictors_reduces_to_normal_model() {
    let y = vec![0.4, -1.2, 2.5, 0.9];
    let data = Dataset::new(Design::Dense(DMatrix::zeros(4, 0)), y.clone(), GlmFamily::Gaussian).unwrap();
    let sd0 = 3.0;
    let mut prior = PriorSpec::new(TauPrior::HalfCauchy { scale: 1.0 }, 1.0, SlabSpec::Infinite, GlmFamily::Gaussian);
    prior.intercept = InterceptPrior::Normal { sd: sd0 };
    let model = GlmModel::new(data, prior).unwrap();
    let (log_tau, beta0, log_sigma) = (-0.3, 0.7, 0.2);
    let mut g = vec![0.0; 3];
    let lp = model.log_density_and_grad(&[log_tau, beta0, log_sigma], &mut g).unwrap();

    let ln_normal =
        |x: f64, m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let sigma = f64::exp(log_sigma);
    let likelihood: f64 = y.iter().map(|&v| ln_normal(v, beta0, sigma)).sum();
    let intercept = ln_normal(beta0, 0.0, sd0);
    // τ/σ ~ half-Cauchy(0, 1) on the log scale, including the Jacobian.
    let t = f64::exp(log_tau);
    let tau = (2.0 / std::f64::consts::PI / (1.0 + t * t)).ln() + log_tau;
    assert!((lp - (likelihood + intercept + tau)).abs() < 1e-12, "{lp}");
}

#[test]
fn infinite_slab_is_the_large_c_limit() {
    for family in [GlmFamily::Gaussian, GlmFamily::BinomialLogit] {
        let data = dataset(family, 20, 5, 9);
        let base = PriorSpec::new(TauPrior::HalfCauchy { scale: 0.5 }, 1.0, SlabSpec::Infinite, family);
        let wide = PriorSpec { slab: SlabSpec::FixedScale { c: 1e8 }, ..base.clone() };
        let a = GlmModel::new(data.clone(), base).unwrap();
        let b = GlmModel::new(data, wide).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = vec![0.0; a.dim()];
        for _ in 0..20 {
            let x: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let la = a.log_density_and_grad(&x, &mut g).unwrap();
            let lb = b.log_density_and_grad(&x, &mut g).unwrap();
            assert!((la - lb).abs() < 1e-6);
        }
    }
}

#[test]
fn log_density_ignores_observation_order() {
    for family in [GlmFamily::Gaussian, GlmFamily::BinomialLogit] {
        let data = dataset(family, 30, 4, 2);
        let mut rows: Vec<usize> = (0..30).collect();
        rows.reverse();
        rows.swap(3, 17);
        let shuffled = data.select_rows(&rows);
        let prior = PriorSpec::new(TauPrior::HalfCauchy { scale: 0.5 }, 1.0, SlabSpec::student_t(4.0, 2.0), family);
        let a = GlmModel::new(data, prior.clone()).unwrap();
        let b = GlmModel::new(shuffled, prior).unwrap();
        let x: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.7).sin()).collect();
        let (mut ga, mut gb) = (vec![0.0; a.dim()], vec![0.0; a.dim()]);
        let la = a.log_density_and_grad(&x, &mut ga).unwrap();
        let lb = b.log_density_and_grad(&x, &mut gb).unwrap();
        assert!((la - lb).abs() < 1e-9 * la.abs().max(1.0));
        assert!(ga.iter().zip(&gb).all(|(p, q)| (p - q).abs() < 1e-9 * p.abs().max(1.0)));
    }
}

#[test]
fn student_t_locals_have_lighter_tails_than_cauchy() {
    let diff = |l: f64| half_t_log_density(l, 3.0, 1.0) - half_t_log_density(l, 1.0, 1.0);
    let crossover = (1..1000).map(|k| k as f64 * 0.01).find(|&l| diff(l) < 0.0).unwrap();
    assert!(crossover > 1.0 && crossover < 3.0, "crossover {crossover}");
    let grid: Vec<f64> = (0..200).map(|k| crossover * 1.05f64.powi(k)).collect();
    assert!(grid.windows(2).all(|w| diff(w[1]) < diff(w[0])));
}

#[test]
fn clamped_hyperparameters_match_conditional_posterior() {
    for (j, (z_mean, z_sd)) in oracle_z_scores(11).into_iter().enumerate() {
        assert!(z_mean.abs() < 3.0 && z_sd.abs() < 3.0, "beta[{j}]: mean z {z_mean}, sd z {z_sd}");
    }
}
