//! Seed derivation and random streams.
//!
//! Every generator is a `ChaCha8Rng` (crate `rand_chacha` 0.9). A generator is
//! identified by a 64-bit seed plus a 64-bit stream number, so independent
//! streams (one per Monte Carlo draw, one per data component) never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Algorithm and version of the random stream, recorded in reports.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), stream-per-index";

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator on stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replication `rep`: `base ^ mix64(rep)`.
pub fn replication_seed(base: u64, rep: u64) -> u64 {
    base ^ mix64(rep)
}

/// Disjoint sub-streams of a replication seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SubStream {
    Design = 1,
    Coefficients = 2,
    Response = 3,
    MonteCarlo = 4,
    Folds = 5,
}

pub fn sub_seed(seed: u64, sub: SubStream) -> u64 {
    mix64(seed ^ mix64(sub as u64).rotate_left(17))
}
