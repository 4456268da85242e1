//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator seeded with
//! `seed_from_u64`. Independent streams (bootstrap replicate `b`, permuted
//! column `j`, ...) get their own 64-bit seed from [`derive_seed`], so results
//! never depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags keep derived seeds for different purposes disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Bootstrap = 1,
    Learner = 2,
    Permutation = 3,
    PermutationColumn = 4,
    Sample = 5,
    Experiment = 6,
    Restart = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)`.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream as u64) ^ index)
}

pub fn stream_rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
