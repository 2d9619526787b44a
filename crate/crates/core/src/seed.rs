//! Stable seed derivation.
//!
//! Every stage derives its randomness from the global seed and a stable key
//! (stage name, provenance), so adding a dialog never perturbs the random
//! choices made for unrelated instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Platform-independent 64-bit hash of a sequence of string parts.
pub fn stable_hash<S: AsRef<str>>(parts: &[S]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_ref().as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Sub-seed for `stage` and `key` under the global `seed`.
pub fn derive_seed(seed: u64, stage: &str, key: &str) -> u64 {
    stable_hash(&[seed.to_string().as_str(), stage, key])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
