//! Seeded random streams.
//!
//! Everything stochastic in the crate takes a `ChaCha8Rng`; independent
//! streams (per trial, per split) are derived from a master seed with
//! [`stream`], so results do not depend on evaluation order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// A generator seeded from `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the family rooted at `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
