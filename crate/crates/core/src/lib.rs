//! Contextual-bandit benchmarking framework.
//!
//! The pieces fit together like this: an environment (a synthetic Gaussian
//! reward surface, or a supervised dataset reduced to a bandit) produces
//! contexts and rewards; a Q-function fitted by automated model search
//! ([`meta`]) predicts expected rewards; epsilon-greedy policies ([`policy`])
//! turn those predictions into actions; and the block-protocol runner
//! ([`runner`]) interleaves acting and retraining while tracking regret.

pub mod dataset;
pub mod error;
pub mod meta;
pub mod policy;
pub mod regret;
pub mod runner;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    ActionId, Context, Episode, FeatureKind, FeatureValue, InteractionLog, Reward, Schema,
    SchemaColumn,
};

use rand_chacha::ChaCha8Rng;

/// The one RNG used throughout: seedable, portable, and fast.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and an index
/// (splitmix64 finalizer). Parallel runs use `derive_seed(master, run)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
