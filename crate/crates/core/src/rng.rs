//! Deterministic seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a path of
//! tags (task name, path id, edge id, ...). Streams with different keys are
//! independent, and adding a consumer never perturbs another consumer's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// One component of a derivation key.
#[derive(Debug, Clone, Copy)]
pub enum Tag<'a> {
    Name(&'a str),
    Index(u64),
}

impl From<u64> for Tag<'_> {
    fn from(v: u64) -> Self {
        Tag::Index(v)
    }
}

impl From<usize> for Tag<'_> {
    fn from(v: usize) -> Self {
        Tag::Index(v as u64)
    }
}

impl<'a> From<&'a str> for Tag<'a> {
    fn from(v: &'a str) -> Self {
        Tag::Name(v)
    }
}

/// 32-byte key derived from `(seed, tags...)`.
pub fn derive_key(seed: u64, tags: &[Tag<'_>]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for t in tags {
        match t {
            Tag::Name(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            Tag::Index(i) => {
                h.update([1u8]);
                h.update(i.to_le_bytes());
            }
        }
    }
    h.finalize().into()
}

/// 64-bit sub-seed derived from `(seed, tags...)`.
pub fn derive_seed(seed: u64, tags: &[Tag<'_>]) -> u64 {
    let k = derive_key(seed, tags);
    u64::from_le_bytes(k[..8].try_into().expect("8 bytes"))
}

/// ChaCha stream keyed by `(seed, tags...)`.
pub fn stream(seed: u64, tags: &[Tag<'_>]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_key(seed, tags))
}

/// Per-item stream: the key is derived once, items select a ChaCha stream
/// number. Cheap to construct for large item counts.
pub fn item_stream(key: &[u8; 32], item: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::from_seed(*key);
    r.set_stream(item);
    r
}
