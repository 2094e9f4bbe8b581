//! Seeded random streams.
//!
//! Every stochastic step draws from a ChaCha stream keyed by `(seed, index)`, so
//! results never depend on how work is scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Independent sub-stream `index` of the master `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw a fresh 64-bit seed from a parent stream, for deriving nested sub-streams.
pub fn child_seed<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
