//! Seed derivation shared by synthesis and resampling.
//!
//! Every unit of work (a shot, a bootstrap resample) owns a ChaCha stream
//! selected by its index under the master seed, so results never depend on
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
