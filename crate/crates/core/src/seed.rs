//! Deterministic seed derivation.
//!
//! Every random stream in the workbench is a `ChaCha8Rng` seeded from a `u64`
//! derived by [`derive`]: `derive(parent, label) = splitmix64(parent ^ splitmix64(label))`.
//! Per-trial seeds are `derive(master, trial_index)`; planner rollouts use
//! `derive(derive(decision_seed, action), rollout_index)`. The rule is part of
//! the reproducibility contract and must not change without bumping the CSV
//! record version.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` for the stream named by `label`.
pub fn derive(parent: u64, label: u64) -> u64 {
    splitmix64(parent ^ splitmix64(label))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit digest of a byte string (little-endian 8-byte words folded
/// through [`derive`]).
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = derive(0, bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        h = derive(h, u64::from_le_bytes(word));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_stable_and_label_sensitive() {
        assert_eq!(derive(7, 3), derive(7, 3));
        assert_ne!(derive(7, 3), derive(7, 4));
        assert_ne!(derive(7, 3), derive(8, 3));
        // frozen value: changing the splitting rule breaks recorded CSVs
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(hash_bytes(&[0]), hash_bytes(&[0, 0]));
        assert_ne!(hash_bytes(&[1, 2, 3]), hash_bytes(&[1, 2, 4]));
    }
}
