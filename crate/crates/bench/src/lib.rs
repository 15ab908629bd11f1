//! Benchmark-only crate; the targets live under `benches/`.
//!
//! Shared fixture builders for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wickstd::chaos::ChaosExpansion;
use wickstd::tensor::{CmVector, SymmetricTensor};

/// Deterministic dense expansion with rank-one kernels at every order.
pub fn fixture_expansion(seed: u64, dimension: usize, max_order: usize) -> ChaosExpansion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = (0..=max_order)
        .map(|k| {
            let components: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let h = CmVector::new(components).unwrap();
            SymmetricTensor::rank_one_power(&h, k).scale(rng.gen_range(-1.0..1.0))
        })
        .collect();
    ChaosExpansion::new(dimension, kernels).unwrap()
}

pub use rand;
pub use rand_chacha;
