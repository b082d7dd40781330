//! Seed derivation: every random stream is keyed by `(base_seed, index, label)`
//! so results do not depend on iteration or thread order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn derive_seed(base: u64, index: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

pub fn derive_rng(base: u64, index: u64, label: &str) -> Rng {
    ChaCha8Rng::from_seed(derive_seed(base, index, label))
}

/// A 64-bit child seed, for handing to APIs that take an integer seed.
pub fn derive_u64(base: u64, index: u64, label: &str) -> u64 {
    let s = derive_seed(base, index, label);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}
