mod common;

use common::{funnel_divergence_fractions, leapfrog_energy_drift, normal_recovery, Funnel, StdNormal};
use horseshoe::sampler::{compute_ess, run_chains, LogDensity, Rejection, SamplerConfig};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn recovers_ten_dimensional_normal() {
    let r = normal_recovery(1);
    assert!(r.worst_mean_z < 4.0, "mean z-score {}", r.worst_mean_z);
    assert!(r.worst_sd_error < 0.1, "sd error {}", r.worst_sd_error);
    assert!(r.max_rhat < 1.01);
    assert_eq!(r.divergence_fraction, 0.0);
}

#[test]
fn identical_seed_gives_identical_draws() {
    let config = SamplerConfig { chains: 2, warmup: 200, samples: 100, seed: 5, ..Default::default() };
    let a = run_chains(&Funnel(3), None, &config).unwrap();
    let b = run_chains(&Funnel(3), None, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn chain_draws_do_not_depend_on_chain_count() {
    let two = SamplerConfig { chains: 2, warmup: 150, samples: 50, seed: 9, ..Default::default() };
    let four = SamplerConfig { chains: 4, ..two.clone() };
    let a = run_chains(&StdNormal(3), None, &two).unwrap();
    let b = run_chains(&StdNormal(3), None, &four).unwrap();
    assert_eq!(a.chains[0], b.chains[0]);
    assert_eq!(a.chains[1], b.chains[1]);
}

#[test]
fn leapfrog_conserves_energy_at_tiny_steps() {
    let worst = leapfrog_energy_drift();
    assert!(worst < 1e-6, "max energy error {worst}");
}

#[test]
fn initialization_failure_names_chain() {
    struct Nowhere;
    impl LogDensity for Nowhere {
        fn dim(&self) -> usize {
            1
        }
        fn log_density_and_grad(&self, _: &[f64], _: &mut [f64]) -> Result<f64, Rejection> {
            Err(Rejection)
        }
    }
    let config = SamplerConfig { chains: 1, warmup: 10, samples: 10, ..Default::default() };
    let err = run_chains(&Nowhere, None, &config).unwrap_err();
    assert!(err.to_string().contains("chain 0"));
    let err = run_chains(&StdNormal(1), Some(&[vec![0.0], vec![1.0]]), &config).unwrap_err();
    assert!(matches!(err, horseshoe::Error::InvalidConfig(_)));
}

#[test]
fn one_dimensional_normal_passes_ks_test() {
    let config = SamplerConfig { chains: 4, warmup: 500, samples: 5000, seed: 2024, ..Default::default() };
    let out = run_chains(&StdNormal(1), None, &config).unwrap();
    let mut draws: Vec<f64> = out.coordinate(0).into_iter().flatten().collect();
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    let normal = Normal::standard();
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic Kolmogorov critical value at alpha = 0.01.
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS statistic {d} >= {critical}");
}

#[test]
fn funnel_produces_divergences_at_low_target_accept() {
    let config =
        SamplerConfig { chains: 4, warmup: 500, samples: 500, target_accept: 0.6, seed: 3, ..Default::default() };
    let out = run_chains(&Funnel(9), None, &config).unwrap();
    assert!(out.divergence_fraction() > 0.0);
}

#[test]
fn reported_ess_matches_spread_of_chain_means() {
    let mut sq = 0.0;
    let mut ess = 0.0;
    let mut count = 0.0;
    for seed in 100..120 {
        let config = SamplerConfig { seed, chains: 1, warmup: 500, samples: 1000, ..Default::default() };
        let out = run_chains(&StdNormal(5), None, &config).unwrap();
        for i in 0..5 {
            let chains = out.coordinate(i);
            let m = chains[0].iter().sum::<f64>() / chains[0].len() as f64;
            sq += m * m;
            ess += compute_ess(&chains).unwrap();
            count += 1.0;
        }
    }
    let implied = count / sq;
    let reported = ess / count;
    let ratio = implied / reported;
    assert!((0.6..1.6).contains(&ratio), "implied ESS {implied}, reported {reported}");
}

#[test]
fn funnel_divergences_fall_as_target_accept_rises() {
    let fractions = funnel_divergence_fractions(&[0.6, 0.8, 0.95, 0.99], 100..108);
    println!("funnel divergence fractions {fractions:?}");
    assert!(fractions.windows(2).all(|w| w[1] <= w[0]), "{fractions:?}");
}
