//! Splittable seed derivation: every random stream is keyed by a path of indices.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with a path of stream indices into a child seed.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN))))
}

pub fn rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}

/// Cheap deterministic hash of a slice of indices, used for input labelings.
pub fn hash_indices(salt: u64, idx: &[usize]) -> u64 {
    idx.iter().fold(splitmix(salt), |acc, &i| splitmix(acc.rotate_left(17) ^ i as u64))
}
