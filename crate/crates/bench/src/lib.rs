//! Fixtures shared by the benchmarks.

use corrsched::harness::sweep::draw_population;
use corrsched::{substream, AlphaDistribution, Population};

/// A reproducible population of `k` users with uniform α and unit power.
pub fn population(k: u64, seed: u64) -> Population {
    let mut rng = substream(seed, &[k]);
    draw_population(k, 1.0, &AlphaDistribution::Uniform, &mut rng).expect("valid population")
}
