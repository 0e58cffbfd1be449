//! Reproducible random streams.
//!
//! A trial is identified by `(master_seed, trial_index)`. Each consumer inside
//! a trial (rewards, arrival order, instance generation, algorithm-internal
//! randomness) gets its own sub-seed: the first eight bytes, little-endian, of
//! `SHA-256(master_seed_le ‖ trial_index_le ‖ tag)`. The sub-seed initialises
//! a xoshiro256++ generator through `seed_from_u64`.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sha2::{Digest, Sha256};

/// The generator every session and sampler in the crate uses.
pub type TrialRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Rewards,
    Order,
    Instance,
    Algorithm,
}

impl StreamTag {
    fn label(self) -> &'static [u8] {
        match self {
            StreamTag::Rewards => b"rewards",
            StreamTag::Order => b"order",
            StreamTag::Instance => b"instance",
            StreamTag::Algorithm => b"algorithm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        SeedSpec {
            master_seed,
            trial_index,
        }
    }

    pub fn derive(&self, tag: StreamTag) -> u64 {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        h.update(self.trial_index.to_le_bytes());
        h.update(tag.label());
        let digest = h.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(head)
    }

    pub fn rng(&self, tag: StreamTag) -> TrialRng {
        rng_from_seed(self.derive(tag))
    }
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_stable() {
        let s = SeedSpec::new(42, 7);
        assert_eq!(s.derive(StreamTag::Rewards), s.derive(StreamTag::Rewards));
        let mut a = s.rng(StreamTag::Order);
        let mut b = SeedSpec::new(42, 7).rng(StreamTag::Order);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn tags_and_trials_separate_streams() {
        let s = SeedSpec::new(42, 7);
        let tags = [
            StreamTag::Rewards,
            StreamTag::Order,
            StreamTag::Instance,
            StreamTag::Algorithm,
        ];
        let mut seen: Vec<u64> = tags.iter().map(|&t| s.derive(t)).collect();
        seen.push(SeedSpec::new(42, 8).derive(StreamTag::Rewards));
        seen.push(SeedSpec::new(43, 7).derive(StreamTag::Rewards));
        let mut dedup = seen.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), seen.len());
    }

    #[test]
    fn known_sub_seed() {
        // Computed independently with Python's hashlib.
        assert_eq!(
            SeedSpec::new(1, 0).derive(StreamTag::Rewards),
            15_768_626_859_538_248_308
        );
    }
}
