//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and positioned on an explicit stream id, so a replicate's
//! randomness depends only on `(seed, stream)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replication `rep` of grid cell `cell`.
pub fn cell_stream(cell: u32, rep: u32) -> u64 {
    (u64::from(cell) << 32) | u64::from(rep)
}
