//! Seedable, splittable random streams.
//!
//! Generation keys an independent ChaCha stream on every field path, so
//! editing one field of a document never perturbs the values drawn for its
//! siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A master seed from which named sub-streams are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for `key`. Same (seed, key) always yields the same stream.
    pub fn substream(&self, key: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(key.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest[..32]);
        ChaCha8Rng::from_seed(seed)
    }

    /// Derive a child seed (used to hand a stable seed to external generators).
    pub fn child_seed(&self, key: &str) -> u64 {
        use rand::RngCore;
        self.substream(key).next_u64()
    }
}
