//! Sparse Bayesian generalized linear regression under the horseshoe,
//! regularized horseshoe, and hierarchical-shrinkage priors.
//!
//! - [`shrinkage`]: closed-form shrinkage factors, `m_eff` moments, reference
//!   global scales, regularized local scales, and pseudo-variances.
//! - [`elicitation`]: Monte Carlo prior draws of `m_eff` and global-scale solving.
//! - [`model`]: log posterior densities with exact gradients for linear and
//!   logistic regression, plus posterior summaries.
//! - [`sampler`]: adaptive NUTS with divergence detection, R̂ and ESS.
//! - [`experiments`]: seeded synthetic benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elicitation;
pub mod error;
pub mod experiments;
pub mod model;
pub mod sampler;
pub mod shrinkage;

pub use error::{Error, Result};
