//! Seed derivation.
//!
//! Every random decision of a batch is driven by its own stream, derived from
//! a root seed and a path of integer tags, so results do not depend on the
//! order in which batch points (or repetitions) are computed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub mod tag {
    pub const REPETITION: u64 = 1;
    pub const ITERATION: u64 = 2;
    pub const INIT_DESIGN: u64 = 3;
    pub const BURN_IN: u64 = 10;
    pub const THETA: u64 = 11;
    pub const OPTIMIZE: u64 = 12;
    pub const JITTER: u64 = 13;
    pub const COIN: u64 = 14;
    pub const FUNCTION: u64 = 15;
    pub const PICK: u64 = 16;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `path` into `root`; distinct paths give unrelated seeds.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(root: u64, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(root, path))
}
