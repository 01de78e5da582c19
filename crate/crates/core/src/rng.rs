//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every trial owns a private stream `hash64(master_seed, trial_index)`, and
//! each purpose (events, activity, channels, noise, clustering) gets its own
//! sub-stream of that. Adding a detection method therefore never perturbs the
//! simulated realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Sub-stream identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Codes = 1,
    Events = 2,
    Activity = 3,
    Channels = 4,
    Noise = 5,
    KMeans = 6,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two 64-bit values.
#[inline]
pub fn hash64(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(17) ^ 0xD6E8_FEB8_6659_FD93)
}

/// Seed of trial `trial_index` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    hash64(master_seed, trial_index)
}

pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    hash64(seed, stream as u64)
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(stream_seed(seed, stream))
}
