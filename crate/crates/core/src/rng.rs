//! Seeded random streams.
//!
//! Every chain (or particle) owns a private ChaCha stream derived from the
//! run seed and its index; decisions shared by the whole ensemble use stream
//! 0. Results therefore do not depend on how many threads execute the moves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream used for ensemble-wide decisions (resampling, shared draws).
pub fn shared_rng(seed: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Private stream of chain (or particle) `index`.
pub fn chain_rng(seed: u64, index: usize) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn chain_rngs(seed: u64, n: usize) -> Vec<StreamRng> {
    (0..n).map(|j| chain_rng(seed, j)).collect()
}
