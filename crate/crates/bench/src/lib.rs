//! Shared inputs for the benchmarks.

use modlab_core::{generate_fixture, AlgebraModel, AlgebraSpec, Fixture};

/// Certified fixture for `standard_factor(n)` at a fixed seed.
pub fn standard_fixture(n: usize) -> Fixture {
    generate_fixture(&AlgebraSpec { model: AlgebraModel::StandardFactor { n }, seed: 7 }, 0.01)
        .expect("fixture certification")
}
