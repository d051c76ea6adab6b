//! Rank-normalized split-R̂ and bulk effective sample size.
//!
//! Chains are split in half, pooled draws are replaced by normal scores of
//! their ranks, and the classic potential scale reduction and Geyer
//! initial-monotone-sequence ESS are computed on the result. R̂ is the
//! maximum of the rank-normalized location and folded (`|x − median|`)
//! versions and the classic split-R̂ on the raw draws; rank normalization
//! alone saturates near 1.8 for two completely separated chains.
//! Constant input yields `NaN` as a sentinel.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn check_shape(chains: &[Vec<f64>], min_chains: usize) -> Result<usize> {
    let len = chains.first().map_or(0, Vec::len);
    if chains.len() < min_chains || len < 4 || chains.iter().any(|c| c.len() != len) {
        return Err(Error::InsufficientChains { min_chains, min_len: 4 });
    }
    Ok(len)
}

fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains[0].len() / 2;
    let len = chains[0].len();
    chains.iter().flat_map(|c| [c[..half].to_vec(), c[len - half..].to_vec()]).collect()
}

fn is_degenerate(chains: &[Vec<f64>]) -> bool {
    let first = chains[0][0];
    chains.iter().flatten().all(|&x| x == first) || chains.iter().flatten().any(|x| !x.is_finite())
}

/// Normal scores of pooled ranks, averaging ties.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = chains[0].len();
    let mut pooled: Vec<(f64, usize)> = chains.iter().flatten().copied().zip(0..).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = pooled.len();
    let mut ranks = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for item in &pooled[i..=j] {
            ranks[item.1] = avg;
        }
        i = j + 1;
    }
    let normal = Normal::standard();
    let s = total as f64;
    let z: Vec<f64> = ranks.iter().map(|r| normal.inverse_cdf((r - 0.375) / (s + 0.25))).collect();
    z.chunks(len).map(<[f64]>::to_vec).collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let between_over_n = sample_var(&means);
    (((n - 1.0) / n * within + between_over_n) / within).sqrt()
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = mean(x);
    (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
}

fn ess_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let acov_mean = |lag: usize| chains.iter().map(|c| autocovariance(c, lag)).sum::<f64>() / m as f64;
    let chain_vars: Vec<f64> = chains.iter().map(|c| autocovariance(c, 0) * n as f64 / (n as f64 - 1.0)).collect();
    let mean_var = mean(&chain_vars);
    let mut var_plus = mean_var * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += sample_var(&chains.iter().map(|c| mean(c)).collect::<Vec<_>>());
    }

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut rho_even = 1.0;
    let mut rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
    rho[1] = rho_odd;
    let mut t = 1;
    while t + 5 < n && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - acov_mean(t + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - acov_mean(t + 2)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[t + 1] = rho_even;
            rho[t + 2] = rho_odd;
        }
        t += 2;
    }
    let max_t = t;
    if rho_even > 0.0 && max_t + 1 < n {
        rho[max_t + 1] = rho_even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        let prev = rho[t - 1] + rho[t];
        if rho[t + 1] + rho[t + 2] > prev {
            rho[t + 1] = prev / 2.0;
            rho[t + 2] = prev / 2.0;
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let tail = if max_t + 1 < n { rho[max_t + 1] } else { 0.0 };
    let tau = (-1.0 + 2.0 * rho[..=max_t.min(n - 1)].iter().sum::<f64>() + tail).max(1.0 / total.log10());
    total / tau
}

/// Rank-normalized split-R̂. Requires at least two chains of equal length ≥ 4.
pub fn compute_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check_shape(chains, 2)?;
    if is_degenerate(chains) {
        log::warn!("R-hat undefined for constant or non-finite draws");
        return Ok(f64::NAN);
    }
    let split_chains = split(chains);
    let bulk = rhat_basic(&rank_normalize(&split_chains));
    let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let median = crate::elicitation::quantile_sorted(&pooled, 0.5);
    let folded: Vec<Vec<f64>> = split_chains.iter().map(|c| c.iter().map(|x| (x - median).abs()).collect()).collect();
    let tail = rhat_basic(&rank_normalize(&folded));
    let classic = rhat_basic(&split_chains);
    Ok(bulk.max(tail).max(classic))
}

/// Bulk effective sample size. Accepts one or more chains of equal length ≥ 4.
pub fn compute_ess(chains: &[Vec<f64>]) -> Result<f64> {
    check_shape(chains, 1)?;
    if is_degenerate(chains) {
        log::warn!("ESS undefined for constant or non-finite draws");
        return Ok(f64::NAN);
    }
    Ok(ess_basic(&rank_normalize(&split(chains))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                shift + z
            })
            .collect()
    }

    #[test]
    fn rhat_well_mixed_and_separated() {
        let mixed = vec![normals(1, 1000, 0.0), normals(2, 1000, 0.0)];
        assert!(compute_rhat(&mixed).unwrap() < 1.01);
        let apart = vec![normals(1, 1000, 0.0), normals(2, 1000, 10.0)];
        let r = compute_rhat(&apart).unwrap();
        assert!(r > 2.0, "rhat {r}");
    }

    #[test]
    fn rhat_preconditions_and_sentinel() {
        assert!(compute_rhat(&[normals(1, 100, 0.0)]).is_err());
        assert!(compute_rhat(&[vec![1.0; 3], vec![1.0; 3]]).is_err());
        assert!(compute_rhat(&[vec![1.0; 10], vec![1.0; 10]]).unwrap().is_nan());
        assert!(compute_ess(&[vec![2.0; 10]]).unwrap().is_nan());
    }

    #[test]
    fn ess_independent_draws() {
        let chains: Vec<_> = (0..4).map(|c| normals(10 + c, 1000, 0.0)).collect();
        let ess = compute_ess(&chains).unwrap();
        assert!((3200.0..=4800.0).contains(&ess), "ess = {ess}");
    }

    #[test]
    fn ess_ar1_matches_analytic_value() {
        let phi: f64 = 0.9;
        let n = 4000;
        let noise = normals(5, n, 0.0);
        let mut x = vec![0.0; n];
        x[0] = noise[0] / (1.0 - phi * phi).sqrt();
        for i in 1..n {
            x[i] = phi * x[i - 1] + noise[i];
        }
        let ess = compute_ess(&[x]).unwrap();
        let expected = n as f64 * (1.0 - phi) / (1.0 + phi);
        assert!(ess > expected / 1.5 && ess < expected * 1.5, "ess {ess} vs {expected}");
    }
}
