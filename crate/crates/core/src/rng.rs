//! Seed splitting.
//!
//! Every random stream in an experiment is derived from one 64-bit seed:
//! `stream = ChaCha8(SHA-256(seed_be || label || index_be))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, label: &str, index: u64) -> SimRng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Sub-seed for nesting (e.g. one seed per sweep point).
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, label, index).next_u64()
}
