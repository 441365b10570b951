//! Seedable random streams.
//!
//! Every stochastic routine takes a `seed` and derives one ChaCha8 stream per
//! replicate: the generator is seeded with `seed_from_u64(seed)` and then
//! switched to stream `index`. Replicates are therefore independent of the
//! order (or thread) in which they are evaluated.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[inline]
pub fn std_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
