//! Seed derivation.
//!
//! Every stage owns its generators and derives child streams by hashing a
//! `(seed, tag, index)` triple, so distinct components never share a stream
//! and runs replay bit-identically regardless of worker scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a 64-bit hash. Also used for config hashes and file checksums.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Incremental FNV-1a over multiple chunks.
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Derive a child seed from a parent seed, a component tag and an index.
pub fn child_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Fnv1a::new();
    h.update(&seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(&index.to_le_bytes());
    h.finish()
}

/// Seeded generator for a named child stream.
pub fn child_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, tag, index))
}
