//! Seeded probe points for rank and degeneracy checks.
//!
//! Degeneracy detection (symplectic non-degeneracy, Legendre Hessians,
//! presymplectic kernels) samples a fixed number of uniform points in
//! [-1, 1]^dim from a seeded generator, so every run sees the same points.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default seed for probe-based checks.
pub const DEFAULT_SEED: u64 = 42;
/// Default number of probe points.
pub const DEFAULT_PROBES: usize = 20;

pub fn probe_points(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}
