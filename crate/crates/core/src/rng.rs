//! Counter-based random streams.
//!
//! A stream is a ChaCha8 generator whose 256-bit key is built from the master
//! seed and a domain tag, and whose 64-bit stream word is the sample index.
//! Sample `i` therefore draws the same numbers no matter which worker runs it
//! or in which order samples are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand::Rng;
pub use rand_distr::{Distribution, StandardNormal};

/// Master seed used when a run does not name one.
pub const DEFAULT_SEED: u64 = 1;

const SALT: [u8; 16] = *b"pinlab/stream/v1";

/// Domain tags keep independent uses of one master seed apart.
pub mod domain {
    pub const DISORDER: u64 = 0x44495344;
    pub const RENEWAL: u64 = 0x52454e45;
    pub const WALK: u64 = 0x57414c4b;
    pub const NOISE: u64 = 0x4e4f4953;
    pub const PATH: u64 = 0x50415448;
    pub const QUADRATURE: u64 = 0x51554144;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub domain: u64,
}

impl StreamKey {
    pub fn new(seed: u64, domain: u64) -> Self {
        Self { seed, domain }
    }

    /// Derived key for a nested family, e.g. paths inside one noise realization.
    pub fn child(&self, index: u64) -> StreamKey {
        StreamKey { seed: self.seed, domain: self.domain ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.domain.to_le_bytes());
        key[16..].copy_from_slice(&SALT);
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
