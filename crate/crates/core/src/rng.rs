//! Reproducible random sub-streams.
//!
//! Every consumer of randomness derives its own generator from the run seed
//! and a path of integer identifiers (replicate, purpose, ...), so results do
//! not depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the distinct uses of randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Edges = 1,
    Shuffle = 2,
    KMeans = 3,
    SvdStart = 4,
    Latent = 5,
    Noise = 6,
    Replicate = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of identifiers into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

pub fn purpose_stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    substream(seed, &[purpose as u64])
}
