//! Deterministic RNG stream derivation.
//!
//! Every randomised computation in the crate draws from a ChaCha8 generator
//! seeded by the caller's master seed, with the 64-bit stream id carved into
//! `(purpose, lane, slot)` fields. Two computations with different purposes
//! (or different lanes/slots within a purpose) never share a stream, so
//! results are reproducible regardless of thread scheduling or the order in
//! which components consume randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes; one per randomised component.
pub(crate) mod purpose {
    pub const UNIFORM_SOURCE: u64 = 1;
    pub const HALF_CAUCHY_PAIRS: u64 = 2;
    pub const PAIRING_SIM: u64 = 3;
    pub const TERNARY_SIM: u64 = 4;
    pub const FALSIFY: u64 = 5;
}

/// A generator on the stream `(purpose, lane, slot)` of `seed`.
///
/// `lane` is truncated to 24 bits and `slot` to 32 bits; callers keep their
/// indices within those ranges (enforced where user input can exceed them).
pub(crate) fn stream_rng(seed: u64, purpose: u64, lane: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | ((lane & 0x00FF_FFFF) << 32) | (slot & 0xFFFF_FFFF));
    rng
}
