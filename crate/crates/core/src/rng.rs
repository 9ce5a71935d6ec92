//! Deterministic random-number streams for replications.
//!
//! Every replication owns three independent ChaCha8 streams derived from the
//! run's base seed and the replication index:
//!
//! * [`Substream::Environment`] — reward noise,
//! * [`Substream::Design`] — arm sampling,
//! * [`Substream::Posterior`] — posterior draws inside Thompson sampling.
//!
//! The per-replication key is [`crate::numeric::replication_seed`] and the
//! substream id selects the ChaCha stream, so replications are reproducible
//! and independent of execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numeric::replication_seed;

/// Role of a random stream inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Environment = 0,
    Design = 1,
    Posterior = 2,
}

/// One ChaCha8 stream for `(base_seed, replication, substream)`.
pub fn substream_rng(base_seed: u64, replication_index: u64, substream: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(base_seed, replication_index));
    rng.set_stream(substream as u64);
    rng
}

/// The full set of streams owned by one replication.
#[derive(Debug, Clone)]
pub struct ReplicationRng {
    pub env: ChaCha8Rng,
    pub design: ChaCha8Rng,
    pub posterior: ChaCha8Rng,
}

impl ReplicationRng {
    pub fn new(base_seed: u64, replication_index: u64) -> Self {
        Self {
            env: substream_rng(base_seed, replication_index, Substream::Environment),
            design: substream_rng(base_seed, replication_index, Substream::Design),
            posterior: substream_rng(base_seed, replication_index, Substream::Posterior),
        }
    }
}
