//! Seeded random streams.
//!
//! Every random decision in the crate draws from a ChaCha8 stream selected by
//! `(seed, stream)`: the generator is seeded with `ChaCha8Rng::seed_from_u64(seed)`
//! and then switched to ChaCha stream number `stream`. Work items that run in
//! parallel each get their own stream id, so results do not depend on thread
//! count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
