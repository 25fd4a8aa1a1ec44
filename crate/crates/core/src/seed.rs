//! Splittable seed derivation.
//!
//! Every random stream in the crate is keyed by `(master seed, stream id)` so
//! results do not depend on evaluation order or on how work is spread across
//! threads. The rule is two rounds of SplitMix64:
//!
//! `derive_seed(m, s) = mix(mix(m) ^ mix(s + 0x9E3779B97F4A7C15))`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for stream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix(mix(master) ^ mix(stream.wrapping_add(GOLDEN)))
}

/// Stream ids used by the library. Kept in one place so no two consumers
/// share a stream by accident.
pub mod streams {
    /// CV fold assignment (CSA, L2QR).
    pub const FOLDS: u64 = 0xF01D;
    /// Offset for per-k subset sampling; the k-th plan uses `SUBSETS + k`.
    pub const SUBSETS: u64 = 0x5_0000;
    /// Per-method seeds inside a replication are `METHOD + position`.
    pub const METHOD: u64 = 0x6_0000;
    pub const BELLONI: u64 = 0xBE11;
    pub const DATA: u64 = 0xDA7A;
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
