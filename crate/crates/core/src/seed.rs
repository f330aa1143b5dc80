//! Deterministic seeding.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a master
//! seed and selected by a stream number, so independent work items (grid
//! points, Haar trials, validation runs) get reproducible generators no
//! matter which thread evaluates them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed, for handing a sub-task its own master seed.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

/// Fresh seed from OS entropy.
pub fn entropy_seed() -> u64 {
    rand::rng().next_u64()
}
