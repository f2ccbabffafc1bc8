//! Named random streams derived from one master seed.
//!
//! The derivation is hand-rolled (FNV-1a over the stream name, splitmix64
//! expansion) so seeds stay stable across platforms and library versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A 64-bit seed for the given stream name (used for network init seeds).
pub fn stream_seed(master: u64, stream: &str) -> u64 {
    let mut state = master ^ fnv1a(stream.as_bytes());
    splitmix64(&mut state)
}

/// An independent ChaCha stream for the given name.
pub fn stream_rng(master: u64, stream: &str) -> ChaCha8Rng {
    let mut state = master ^ fnv1a(stream.as_bytes());
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
