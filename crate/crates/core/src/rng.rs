//! Seeded random streams.
//!
//! Every stream is a xoshiro256++ generator whose state is derived from a
//! base seed and a stream index through splitmix64. Streams for different
//! indices are independent of each other, so work split into indexed chunks
//! gives the same result for any worker count.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

pub type Stream = Xoshiro256PlusPlus;

/// Mixes a base seed with a stream index.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut sm = SplitMix64::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    sm.next_u64() ^ sm.next_u64().rotate_left(17)
}

/// The generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(mix(seed, index))
}
