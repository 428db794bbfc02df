//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of stream keys (run, iteration, circuit, ...).
///
/// The result depends only on the inputs, so work items can be scheduled in
/// any order without changing what they draw.
pub fn derive_seed(base: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(base), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream(base: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, keys))
}
