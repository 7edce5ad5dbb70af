//! Process- and platform-independent hashing for seeded, reproducible choices.

use sha2::{Digest, Sha256};

/// First eight bytes of `SHA-256(seed_le || 0x00 || key)` as a big-endian integer.
pub fn stable_hash(key: &str, seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0u8]);
    h.update(key.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}
