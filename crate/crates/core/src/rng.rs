//! Counter-based random substreams.
//!
//! Every draw in a simulation comes from a ChaCha stream keyed by the run seed,
//! the round and a [`Purpose`], so adding or removing draws for one purpose
//! never shifts the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Pool = 1,
    ArmSelect = 2,
    KeytermSelect = 3,
    ArmFeedback = 4,
    KeytermFeedback = 5,
    Environment = 6,
    Users = 7,
}

/// Seed of one `(seed, user)` simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunSeed(u64);

impl RunSeed {
    pub fn new(seed: u64, user: usize) -> Self {
        // splitmix64 finalizer over the pair
        let mut z = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((user as u64).wrapping_add(1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Self(z ^ (z >> 31))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Generator for a given round and purpose.
    pub fn stream(self, round: usize, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(((round as u64) << 4) | purpose as u64);
        rng
    }
}

/// Generator for one-off generation tasks keyed only by a seed and purpose.
pub fn seeded(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
