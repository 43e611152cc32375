//! Fixtures shared by the benchmarks.

use momlab_core::catalog::chirped_packet;
use momlab_core::koopman::{ClassicalWaveFunction, PhaseGrid2D};
use momlab_core::linalg::random_hermitian;
use momlab_core::{HermitianOperator, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 7;

/// Centered chirped packet on `[-6, 6]²` with `n²` nodes.
pub fn packet(n: usize) -> Result<ClassicalWaveFunction> {
    chirped_packet(&PhaseGrid2D::square(6.0, n)?, 1.0, [0.0, 0.0], 0.85, 0.25)
}

pub fn hermitian(n: usize) -> Result<HermitianOperator> {
    HermitianOperator::new(random_hermitian(&mut ChaCha8Rng::seed_from_u64(SEED), n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(packet(16).unwrap().grid().len(), 256);
        assert_eq!(hermitian(3).unwrap().dim(), 3);
    }
}
