//! Seeded random streams.
//!
//! Every random draw in the crate goes through a [`Stream`], a ChaCha8
//! generator keyed by a 64-bit seed and a stream number. Parallel replicates
//! derive disjoint stream numbers from their indices, so results never depend
//! on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream for `seed` and the given path of indices (replicate, sample size
/// index, purpose tag, ...).
pub fn substream(seed: u64, path: &[u64]) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(path));
    rng
}

fn mix(path: &[u64]) -> u64 {
    // splitmix64 folded over the path
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in path {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
