//! Splittable random streams: one ChaCha8 stream per `(seed, stream id)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// Independent stream `id` derived from a master `seed`.
pub fn stream(seed: u64, id: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
