//! Seed derivation. Every random consumer in a run draws from its own
//! ChaCha stream so that adding a consumer never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Problem = 2,
    Init = 3,
    Probabilities = 4,
    Channel = 5,
    Bandit = 6,
    Constants = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(stream as u64))
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Generator for one element of a keyed family (for example one directed
/// link), independent of every other key under the same seed.
pub fn keyed_rng(seed: u64, stream: Stream, key: u64) -> ChaCha8Rng {
    let mut rng = stream_rng(seed, stream);
    rng.set_stream(key);
    rng
}
