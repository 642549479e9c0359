//! Seedable, counter-based random streams.
//!
//! Every random quantity in the simulator is drawn from a ChaCha12 stream
//! addressed by a `(domain, a, b, c)` tuple packed into the generator's
//! 64-bit stream id, keyed by the master seed. Stream assignment:
//!
//! | domain          | a              | b        | c         |
//! |-----------------|----------------|----------|-----------|
//! | `CHANNEL_TAPS`  | stirring sample| rx       | tx        |
//! | `MIXING`        | 0              | 0        | 0         |
//! | `DATA_BITS`     | stirring sample| frame    | stream    |
//! | `NOISE`         | stirring sample| frame    | rx branch |
//!
//! Because each entity owns its own stream, ensembles can be generated in
//! parallel in any order and still come out bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream domains. Values are stable; changing them changes every seeded run.
pub mod domain {
    pub const CHANNEL_TAPS: u8 = 1;
    pub const MIXING: u8 = 2;
    pub const DATA_BITS: u8 = 3;
    pub const NOISE: u8 = 4;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; used to expand the master seed into key material
/// and to derive labeled sub-seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a labeled sub-seed from a master seed. Used to give each SNR point
/// and each compared system its own independent master seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ tag.wrapping_mul(GOLDEN))
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    key
}

fn pack_stream(domain: u8, a: u32, b: u16, c: u16) -> u64 {
    debug_assert!(a < (1 << 24), "stream index a out of range");
    ((domain as u64) << 56) | ((a as u64) << 32) | ((b as u64) << 16) | c as u64
}

/// Counter-based generator for the stream `(domain, a, b, c)` under `seed`.
pub fn stream_rng(seed: u64, domain: u8, a: u32, b: u16, c: u16) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(key_from_seed(seed));
    rng.set_stream(pack_stream(domain, a, b, c));
    rng
}
