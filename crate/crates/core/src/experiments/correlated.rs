//! Block-correlated Gaussian features with sparse logistic responses.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::job_rng;
use crate::error::{Error, Result};
use crate::model::{Dataset, Design};
use crate::shrinkage::GlmFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub n_relevant: usize,
    pub block_size: usize,
    /// Correlation between features in the same block.
    pub rho: f64,
    /// Magnitude of each nonzero true coefficient.
    pub effect: f64,
}

impl CorrelatedConfig {
    pub fn new(n: usize, dim: usize, n_relevant: usize, block_size: usize) -> Self {
        Self { n_train: n, n_test: n, dim, n_relevant, block_size, rho: 0.7, effect: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.dim == 0 || self.block_size == 0 {
            return Err(Error::InvalidConfig("n_train, dim and block_size must be positive".into()));
        }
        if self.n_relevant > self.dim {
            return Err(Error::InvalidConfig("n_relevant exceeds dim".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig("rho must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub beta: Vec<f64>,
}

/// Features in consecutive blocks share a common factor:
/// `x_ij = sqrt(ρ) f_ib + sqrt(1 − ρ) e_ij`, giving unit variances and
/// within-block correlation `ρ`. Nonzero coefficients are spread over blocks
/// (one per block, cycling) with random signs.
pub fn generate_correlated_classification(config: &CorrelatedConfig, seed: u64) -> Result<CorrelatedData> {
    config.validate()?;
    let mut rng = job_rng(seed, &[]);
    let blocks = config.dim.div_ceil(config.block_size);
    let mut relevant: Vec<usize> = Vec::with_capacity(config.n_relevant);
    let mut offset = 0;
    while relevant.len() < config.n_relevant {
        for b in 0..blocks {
            let j = b * config.block_size + offset;
            if j < config.dim && relevant.len() < config.n_relevant {
                relevant.push(j);
            }
        }
        offset += 1;
    }
    let mut beta = vec![0.0; config.dim];
    for &j in &relevant {
        beta[j] = if rng.random::<bool>() { config.effect } else { -config.effect };
    }
    let (a, b) = (config.rho.sqrt(), (1.0 - config.rho).sqrt());
    let mut generate = |n: usize| -> Result<Dataset> {
        let mut x = nalgebra::DMatrix::zeros(n, config.dim);
        let mut y = vec![0.0; n];
        for i in 0..n {
            for blk in 0..blocks {
                let f: f64 = rng.sample(StandardNormal);
                for j in blk * config.block_size..((blk + 1) * config.block_size).min(config.dim) {
                    let e: f64 = rng.sample(StandardNormal);
                    x[(i, j)] = if config.block_size == 1 { e } else { a * f + b * e };
                }
            }
            let eta: f64 = (0..config.dim).map(|j| x[(i, j)] * beta[j]).sum();
            y[i] = f64::from(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        }
        Dataset::new(Design::Dense(x), y, GlmFamily::BinomialLogit)
    };
    let train = generate(config.n_train)?;
    let test = if config.n_test > 0 { Some(generate(config.n_test)?) } else { None };
    Ok(CorrelatedData { train, test, beta })
}
