//! Seed derivation for reproducible, parallel-safe replicates.
//!
//! Every random stream is keyed by `(master, replicate, tag)`:
//!
//! ```text
//! seed = splitmix64(master ^ splitmix64(replicate ^ splitmix64(fnv1a64(tag))))
//! ```
//!
//! and drives a `ChaCha8Rng`. Two streams collide only if all three keys
//! coincide, so replicates can run on any thread in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags used throughout the crate.
pub mod tags {
    pub const SAMPLE_P: &str = "sample/p";
    pub const SAMPLE_Q: &str = "sample/q";
    pub const SPLIT: &str = "split";
    pub const CALIBRATION: &str = "calibration";
    pub const MLP_INIT: &str = "mlp/init";
    pub const PERMUTATION: &str = "permutation";
    pub const REPLICATE: &str = "replicate";
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of the stream `(master, replicate, tag)`.
pub fn derive_seed(master: u64, replicate: u64, tag: &str) -> u64 {
    splitmix64(master ^ splitmix64(replicate ^ splitmix64(fnv1a64(tag))))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(master, replicate, tag))`.
pub fn stream(master: u64, replicate: u64, tag: &str) -> Rng {
    rng_from_seed(derive_seed(master, replicate, tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_stable_and_separates_keys() {
        let a = derive_seed(7, 0, tags::SPLIT);
        assert_eq!(a, derive_seed(7, 0, tags::SPLIT));
        assert_ne!(a, derive_seed(7, 1, tags::SPLIT));
        assert_ne!(a, derive_seed(8, 0, tags::SPLIT));
        assert_ne!(a, derive_seed(7, 0, tags::CALIBRATION));
    }

    #[test]
    fn streams_replay_bitwise() {
        let mut r1 = stream(42, 3, tags::SAMPLE_P);
        let mut r2 = stream(42, 3, tags::SAMPLE_P);
        for _ in 0..16 {
            assert_eq!(r1.next_u64(), r2.next_u64());
        }
    }
}
