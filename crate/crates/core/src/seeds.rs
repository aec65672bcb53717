//! Stable per-run seed derivation.

use sha2::{Digest, Sha256};

/// Seed for run `index` of the item labelled `label` under `master`.
///
/// Depends only on its arguments (not on thread scheduling or platform), so
/// batch results are reproducible for any degree of parallelism.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
