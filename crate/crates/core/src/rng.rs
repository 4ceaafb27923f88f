//! Deterministic random streams.
//!
//! All randomness comes from SplitMix64 (Steele, Lea & Flood, "Fast
//! splittable pseudorandom number generators", OOPSLA 2014): a 64-bit
//! Weyl-sequence counter passed through a fixed avalanche mix. The output is
//! a pure function of the seed and the position, identical on every platform.
//!
//! An experiment owns one master seed. Every episode gets independent
//! sub-streams whose seeds are derived by mixing `(master_seed, episode,
//! tag)`, so the latent means of episode `e` never depend on how many pulls
//! a strategy spent in that (or any other) episode.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for SplitMix64 {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Which independent sub-stream of an episode a generator feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    Means,
    Payouts,
    Auxiliary,
}

impl StreamTag {
    fn salt(self) -> u64 {
        match self {
            StreamTag::Means => 0x6d65_616e_7300_0001,
            StreamTag::Payouts => 0x7061_796f_7574_0002,
            StreamTag::Auxiliary => 0x6175_7869_6c00_0003,
        }
    }
}

/// Seed of the `(master, episode, tag)` sub-stream.
pub fn derive_seed(master: u64, episode: u64, tag: StreamTag) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN_GAMMA));
    let b = mix64(
        a ^ episode
            .wrapping_mul(GOLDEN_GAMMA)
            .wrapping_add(0x2545_F491_4F6C_DD1D),
    );
    mix64(b ^ tag.salt())
}

pub fn substream(master: u64, episode: u64, tag: StreamTag) -> SplitMix64 {
    SplitMix64::new(derive_seed(master, episode, tag))
}
