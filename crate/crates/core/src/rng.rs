//! Seeded random streams: one ChaCha stream per orbit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform on `(0, 1]`.
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Position of a stream, for checkpoints.
pub fn word_pos(rng: &StreamRng) -> u128 {
    rng.get_word_pos()
}

pub fn resume(seed: u64, stream: u64, word_pos: u128) -> StreamRng {
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos(word_pos);
    rng
}
