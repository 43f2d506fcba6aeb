//! Seed derivation and Gaussian sampling.
//!
//! Every stochastic component (channel parameters, measurement noise,
//! weight initialization, batch shuffling, dropout masks) draws from its
//! own ChaCha8 stream.  Stream seeds are derived from a base seed with
//! [`combine`], a SplitMix64-based mix, so adding or reordering consumers
//! never shifts another component's randomness and full runs stay
//! bit-reproducible across platforms and thread schedules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer: one bijective avalanche step on a 64-bit word.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream tag.
pub fn combine(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Per-trial seed inside a sweep: mixes the base seed with the axis-point
/// index and the trial index.
pub fn trial_seed(base: u64, axis_index: u64, trial_index: u64) -> u64 {
    combine(combine(base, axis_index), trial_index)
}

/// A ChaCha8 generator for the given (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(combine(seed, stream))
}

/// One standard-normal pair via the Box-Muller transform.
///
/// The radius uses `1 - u` so the logarithm sees a value in (0, 1] and
/// stays finite for every generator output.
pub fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
