//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator. A stream is identified by a 64-bit
//! seed plus a 64-bit stream id, so `(seed, stream)` pairs are independent
//! and reproducible regardless of which thread consumes them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used everywhere in the crate.
pub type NoiseRng = ChaCha8Rng;

/// Stream for a given seed and stream id.
pub fn stream(seed: u64, stream_id: u64) -> NoiseRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Derives a child seed from a parent seed and a key (SplitMix64 finalizer).
pub fn derive_seed(parent: u64, key: u64) -> u64 {
    let mut z = parent ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a string key (FNV-1a) so configuration ids can seed streams.
pub fn hash_key(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
