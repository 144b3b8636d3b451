//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from a `u64`; independent streams are derived by mixing a parent
//! seed with a stream tag so no two consumers ever share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Tags naming the sub-streams a solver run splits its seed into.
pub mod tag {
    pub const MAP: u64 = 0x6d61_7000;
    pub const SEARCH: u64 = 0x7365_6172;
    pub const ORACLE: u64 = 0x6f72_6163;
    pub const HOLDOUT: u64 = 0x686f_6c64;
    pub const SCENARIOS: u64 = 0x7363_656e;
    pub const REFERENCE: u64 = 0x7265_6665;
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an ordered list of tags.
pub fn derive(parent: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(parent), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}
