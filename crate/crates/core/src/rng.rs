//! Seeded, counter-based random streams.
//!
//! Every run derives one ChaCha key from `(seed, run)`; each chain and the
//! exchange step read from their own stream of that key, so the draws a
//! chain sees do not depend on the order in which chains are stepped.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream id reserved for exchange / jump decisions.
pub const EXCHANGE_STREAM: u64 = 0;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed material for a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeed {
    pub seed: u64,
    pub run: u64,
}

impl RunSeed {
    pub fn new(seed: u64, run: u64) -> Self {
        Self { seed, run }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut s = self.seed ^ splitmix(self.run.wrapping_add(0xA5A5_5A5A));
        for chunk in key.chunks_mut(8) {
            s = splitmix(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        key
    }

    /// Stream for an arbitrary purpose id.
    pub fn stream(&self, id: u64) -> StreamRng {
        let mut rng = StreamRng::from_seed(self.key());
        rng.set_stream(id);
        rng
    }

    /// Stream owned by chain `chain` (0-based).
    pub fn chain(&self, chain: usize) -> StreamRng {
        self.stream(chain as u64 + 1)
    }

    /// Stream for exchange and jump decisions.
    pub fn exchange(&self) -> StreamRng {
        self.stream(EXCHANGE_STREAM)
    }

    /// Stream for experiment set-up (data generation, initial states).
    pub fn setup(&self) -> StreamRng {
        self.stream(u64::MAX)
    }
}
