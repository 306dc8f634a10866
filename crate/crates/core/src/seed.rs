//! Seed derivation for the independent random streams of a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable splitmix64 mix of a base seed with a sequence of stream tags.
///
/// Every random decision in a run (bootstrap, top-level clustering, each
/// round's subclustering, training shuffles) draws from its own stream so that
/// adding a round or a strategy never perturbs the others.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix(base);
    for &part in parts {
        state = splitmix(state ^ splitmix(part.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags used with [`derive_seed`].
pub mod stream {
    pub const BOOTSTRAP: u64 = 1;
    pub const CLUSTERS: u64 = 2;
    pub const SELECT: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const SUBCLUSTER: u64 = 5;
    pub const SPLIT: u64 = 6;
}
