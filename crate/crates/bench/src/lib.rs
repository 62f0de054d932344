//! Shared helpers for the pipeline benchmarks.

use bandit_core::synthetic::{pull, sample_context, SyntheticEnvSpec};
use bandit_core::{seeded_rng, ActionId, Episode, InteractionLog, Schema};
use rand::Rng;

/// A random-policy log of `n` episodes on the given synthetic env.
pub fn random_play_log(spec: &SyntheticEnvSpec, n: usize, seed: u64) -> InteractionLog {
    let mut rng = seeded_rng(seed);
    let mut log = InteractionLog::new(Schema::numeric(spec.d), spec.k);
    for t in 1..=n {
        let s = sample_context(spec, &mut rng);
        let a = ActionId(((rng.random::<f64>() * spec.k as f64) as usize).min(spec.k - 1));
        let r = pull(spec, &s, a, &mut rng).unwrap();
        log.append_episode(Episode {
            t,
            context: s,
            action: a,
            reward: r,
            epsilon_used: 1.0,
            explored: true,
        })
        .unwrap();
    }
    log
}
