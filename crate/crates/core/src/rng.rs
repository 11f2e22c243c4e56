//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit RNG. Ensembles derive one
//! independent sub-seed per member from a master seed with [`derive_seed`],
//! so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate. ChaCha8 is portable across platforms
/// and word sizes, which keeps outputs byte-identical for a given seed.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitting rule `(master, path) -> sub_seed`.
///
/// The seed is folded through SplitMix64 once per path element:
/// `s_0 = splitmix64(master)`, `s_{k+1} = splitmix64(s_k ^ splitmix64(path[k] + 1))`.
/// Distinct paths give statistically independent streams.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(1)))
    })
}

pub fn derived(master: u64, path: &[u64]) -> SeededRng {
    seeded(derive_seed(master, path))
}
