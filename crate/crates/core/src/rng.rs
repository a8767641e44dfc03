//! Seeded, splittable random streams.
//!
//! Every sampler takes an explicit generator. Independent tasks (data index,
//! chain, replicate) get their own ChaCha stream derived from the user seed
//! and the task's index path, so results never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A generator for the stream identified by `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> Rng {
    let mut r = Rng::seed_from_u64(seed);
    let id = path
        .iter()
        .fold(mix64(path.len() as u64), |h, &p| mix64(h ^ mix64(p)));
    r.set_stream(id);
    r
}

/// Stream tags used across the crate, so distinct purposes never collide.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const BRIDGE: u64 = 2;
    pub const SOURCE: u64 = 3;
    pub const DISPERSION: u64 = 4;
    pub const FRECHET: u64 = 5;
    pub const WALK: u64 = 6;
    pub const EVIDENCE: u64 = 7;
    pub const BOOTSTRAP: u64 = 8;
}
