// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded random streams.
//!
//! Every Monte Carlo routine derives its generator from a `(seed, stream)`
//! pair, where the stream is typically the replication index. Results are
//! therefore independent of how replications are split across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Identifier of the generator, recorded in every output header.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64-stream";

pub type StreamRng = ChaCha8Rng;

/// Generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills a vector with `n` standard normal draws.
pub fn normal_draws(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
