mod common;

use common::{
    kappa_density_integral, kappa_draws, meff_draw_moments, moments, pseudo_variance_fd_max_error,
    shifted_profile_max_error,
};
use horseshoe::shrinkage::{
    conditional_posterior_beta, kappa_moments, lambda_tilde, lambda_tilde_exact, meff_moments, pseudo_variance,
    shrinkage_factor, tau_reference, GlmFamily, ShrinkageContext,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const A_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[test]
fn kappa_density_integrates_to_one() {
    for a in A_GRID {
        let total = kappa_density_integral(a);
        assert!((total - 1.0).abs() < 1e-6, "a = {a}: {total}");
    }
}

#[test]
fn kappa_moments_match_monte_carlo() {
    for (i, a) in A_GRID.into_iter().enumerate() {
        let m = moments(&kappa_draws(a, 200_000, 10 + i as u64));
        let (mean, var) = kappa_moments(a).unwrap();
        assert!((m.mean - mean).abs() < 3.0 * m.mean_se, "a = {a}: mean {} vs {mean}", m.mean);
        assert!((m.var - var).abs() < 3.0 * m.var_se, "a = {a}: var {} vs {var}", m.var);
    }
}

#[test]
fn meff_moments_match_monte_carlo() {
    let ctx = ShrinkageContext::with_scales(100, 1.3, vec![0.5, 1.0, 2.0, 0.8, 1.1, 3.0, 0.2, 1.0, 1.0, 0.7]).unwrap();
    for (i, tau) in [0.01, 0.1, 0.6].into_iter().enumerate() {
        let m = meff_draw_moments(tau, &ctx, 40_000, 3 + i as u64);
        let (mean, var) = meff_moments(tau, &ctx).unwrap();
        assert!((m.mean - mean).abs() < 3.0 * m.mean_se, "tau {tau}: mean {} vs {mean}", m.mean);
        assert!((m.var - var).abs() < 3.0 * m.var_se, "tau {tau}: var {} vs {var}", m.var);
    }
}

#[test]
fn reference_tau_for_thousand_predictors() {
    let ctx = ShrinkageContext::new(200, 1000, 1.0).unwrap();
    let tau0 = tau_reference(5.0, &ctx).unwrap();
    assert!((tau0 - 3.6e-4).abs() < 0.05e-4, "{tau0}");
}

#[test]
fn balanced_binomial_pseudo_variance_is_four() {
    assert_eq!(pseudo_variance(&GlmFamily::BinomialLogit, 0.5, 1.0).unwrap(), 4.0);
}

#[test]
fn exact_local_scale_shifts_the_profile() {
    let worst = shifted_profile_max_error();
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn pseudo_variance_matches_log_likelihood_curvature() {
    let worst = pseudo_variance_fd_max_error();
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn conditional_mean_vanishes_as_tau_shrinks() {
    let x = DMatrix::from_fn(8, 3, |i, j| ((i * 3 + j) as f64).sin());
    let y = DVector::from_fn(8, |i, _| i as f64 - 3.0);
    let (mean, _) = conditional_posterior_beta(&x, &y, &[1.0, 2.0, 0.5], 1e-9, 1.0).unwrap();
    assert!(mean.amax() < 1e-15);
}

proptest! {
    #[test]
    fn shrinkage_factor_is_invariant_under_joint_rescaling(
        n in 1usize..500,
        sigma in 0.05f64..20.0,
        s in 0.1f64..5.0,
        tau in 1e-4f64..10.0,
        lambda in 1e-3f64..100.0,
        gamma in 0.01f64..100.0,
    ) {
        let a = ShrinkageContext::with_scales(n, sigma, vec![s]).unwrap();
        let b = ShrinkageContext::with_scales(n, gamma * sigma, vec![s]).unwrap();
        let k1 = shrinkage_factor(tau, lambda, &a, 0).unwrap();
        let k2 = shrinkage_factor(gamma * tau, lambda, &b, 0).unwrap();
        prop_assert!((k1 - k2).abs() < 1e-12);
    }

    #[test]
    fn reference_tau_centers_meff_on_prior_guess(
        n in 1usize..1000,
        dim in 2usize..2000,
        sigma in 0.01f64..50.0,
        frac in 0.001f64..0.999,
    ) {
        let p0 = frac * dim as f64;
        let ctx = ShrinkageContext::new(n, dim, sigma).unwrap();
        let (mean, _) = meff_moments(tau_reference(p0, &ctx).unwrap(), &ctx).unwrap();
        prop_assert!((mean - p0).abs() <= 1e-9 * p0.max(1.0));
    }

    #[test]
    fn exact_and_approximate_local_scales_agree_for_informative_data(
        n in 100usize..10_000,
        sigma in 0.1f64..3.0,
        c in 0.5f64..10.0,
        tau in 1e-3f64..1.0,
        lambda in 1e-2f64..100.0,
    ) {
        let ctx = ShrinkageContext::new(n, 1, sigma).unwrap();
        prop_assume!(ctx.precision(0) * c * c >= 1000.0);
        let exact = lambda_tilde_exact(lambda, tau, c, &ctx, 0).unwrap();
        let approx = lambda_tilde(lambda, tau, c).unwrap();
        prop_assert!((exact - approx).abs() / approx < 1e-3);
    }

    #[test]
    fn shrinkage_factor_decreases_in_tau_and_lambda(
        tau in 1e-3f64..5.0,
        lambda in 1e-3f64..50.0,
        step in 1.01f64..3.0,
    ) {
        let ctx = ShrinkageContext::new(50, 1, 1.0).unwrap();
        let k = shrinkage_factor(tau, lambda, &ctx, 0).unwrap();
        prop_assert!(shrinkage_factor(tau * step, lambda, &ctx, 0).unwrap() < k);
        prop_assert!(shrinkage_factor(tau, lambda * step, &ctx, 0).unwrap() < k);
    }
}
