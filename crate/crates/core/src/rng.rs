//! Reproducible per-trial random streams.
//!
//! Every trial draws from ChaCha8 keyed by the master seed and using the trial
//! index as its 64-bit stream id. The key is the master seed expanded to 256
//! bits with SplitMix64. Streams are independent of one another and of the
//! order in which trials execute, so a batch gives the same numbers on any
//! thread count or platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

pub type TrialRng = ChaCha8Rng;

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn key_from_seed(master_seed: u64) -> [u8; 32] {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Generator for trial `trial` of a batch seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(master_seed));
    rng.set_stream(trial);
    rng
}

/// Unbiased integer in `[0, bound)` by multiply-and-reject (Lemire).
///
/// Uses a single 64-bit draw except on rejection, which happens with
/// probability below `bound / 2^64`.
#[inline]
pub fn uniform_below<R: Rng + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    let mut m = u128::from(rng.next_u64()) * u128::from(bound);
    if (m as u64) < bound {
        let threshold = bound.wrapping_neg() % bound;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(bound);
        }
    }
    (m >> 64) as u64
}
