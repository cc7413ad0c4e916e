//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), whose
//! output stream is fixed across platforms and crate versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) type Rng = ChaCha8Rng;

/// Independent stream per (seed, stream) pair.
pub(crate) fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
