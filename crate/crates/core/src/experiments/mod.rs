//! Seeded synthetic benchmarks.
//!
//! Every experiment is a deterministic function of its configuration and
//! seed: each independent job (replication, prior variant, ...) derives its
//! own seed from the experiment seed and its job coordinates, so running jobs
//! in parallel does not change results.

mod correlated;
mod separable;
mod toy;

pub use correlated::{generate_correlated_classification, CorrelatedConfig, CorrelatedData};
pub use separable::{run_separable, separable_data, SeparableConfig, SeparableReport, SeparableVariant, VariantReport};
pub use toy::{run_toy, run_toy_scaling, toy_data, ScalingReport, ScalingRow, ToyConfig, ToyPrior, ToyReport, ToyRow};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed for the job at `coords`, derived from the experiment seed.
pub fn job_seed(seed: u64, coords: &[u64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &c in coords {
        rng.set_stream(c.wrapping_add(1));
        rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    }
    rng.next_u64()
}

pub(crate) fn job_rng(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(job_seed(seed, coords))
}
