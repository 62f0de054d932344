//! Exploration policies: epsilon-greedy over Q-function predictions with
//! fixed, inverse-n, and linearly annealed schedules, the uniform-random
//! baseline, and an online-gradient linear learner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::meta::{predict_q, QModel};
use crate::types::{ActionId, Context, FeatureKind, FeatureValue, Reward, Schema};

/// Exploration-rate schedule. `t` is the 1-based episode index, `n` the
/// 1-based retraining-block index; the inverse-n kind anneals per block, the
/// linear kind per episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Fixed {
        epsilon0: f64,
    },
    InverseN {
        epsilon0: f64,
    },
    Linear {
        epsilon0: f64,
        #[serde(rename = "T_anneal")]
        t_anneal: usize,
    },
}

/// Epsilon at episode `t` of block `n`:
/// fixed: `e0`; inverse_n: `min(1, e0 / n)`;
/// linear: `e0 * max(0, 1 - t / T_anneal)`, hitting exactly 0 at `t >= T_anneal`.
pub fn epsilon_at(schedule: &EpsilonSchedule, t: usize, n: usize) -> f64 {
    debug_assert!(t >= 1 && n >= 1);
    match *schedule {
        EpsilonSchedule::Fixed { epsilon0 } => epsilon0,
        EpsilonSchedule::InverseN { epsilon0 } => (epsilon0 / n as f64).min(1.0),
        EpsilonSchedule::Linear { epsilon0, t_anneal } => {
            epsilon0 * (1.0 - t as f64 / t_anneal as f64).max(0.0)
        }
    }
}

/// Epsilon-greedy over a slice of per-action values. Consumes exactly two rng
/// draws in pinned order: the exploration coin, then the uniform action draw
/// (whether or not it is used). Greedy ties break to the lowest index.
pub fn select_action_values(
    values: &[f64],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> (ActionId, bool) {
    let k = values.len();
    let coin = rng.random::<f64>();
    let u = rng.random::<f64>();
    if coin < epsilon {
        (ActionId(((u * k as f64) as usize).min(k - 1)), true)
    } else {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = i;
            }
        }
        (ActionId(best), false)
    }
}

/// Epsilon-greedy over the Q-function's predictions for every action.
pub fn select_action(
    q: &QModel,
    s: &Context,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(ActionId, bool)> {
    let values: Vec<f64> = (0..q.num_actions())
        .map(|a| predict_q(q, s, ActionId(a)))
        .collect::<Result<_>>()?;
    Ok(select_action_values(&values, epsilon, rng))
}

/// Uniform action draw: one rng value, `floor(u * K)`.
pub fn random_policy(k: usize, rng: &mut ChaCha8Rng) -> ActionId {
    let u = rng.random::<f64>();
    ActionId(((u * k as f64) as usize).min(k - 1))
}

const HASH_BUCKETS: usize = 16;

/// Schema-driven encoding usable before any data is seen: numeric features
/// pass through, categorical tokens hash into a fixed per-column one-hot
/// block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineEncoder {
    pub schema: Schema,
}

impl OnlineEncoder {
    pub fn width(&self) -> usize {
        self.schema
            .columns
            .iter()
            .map(|c| match c.kind {
                FeatureKind::Numeric => 1,
                FeatureKind::Categorical => HASH_BUCKETS,
            })
            .sum()
    }

    pub fn encode(&self, context: &Context) -> Result<Vec<f64>> {
        self.schema.validate(context)?;
        let mut out = Vec::with_capacity(self.width());
        for value in &context.values {
            match value {
                FeatureValue::Numeric(v) => out.push(*v),
                FeatureValue::Categorical(token) => {
                    let bucket = fnv1a(token.as_bytes()) as usize % HASH_BUCKETS;
                    for i in 0..HASH_BUCKETS {
                        out.push(if i == bucket { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(out)
    }
}

// FNV-1a; std hashers don't guarantee a stable mapping across releases
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Per-action linear learner trained by squared-loss SGD on whichever arm was
/// pulled. Stand-in for an online-gradient contextual-bandit baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineLinearBaseline {
    pub encoder: OnlineEncoder,
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub learning_rate: f64,
    pub schedule: EpsilonSchedule,
}

impl OnlineLinearBaseline {
    pub fn new(schema: Schema, k: usize, learning_rate: f64, schedule: EpsilonSchedule) -> Self {
        let encoder = OnlineEncoder { schema };
        let dim = encoder.width();
        OnlineLinearBaseline {
            encoder,
            weights: vec![vec![0.0; dim]; k],
            intercepts: vec![0.0; k],
            learning_rate,
            schedule,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, s: &Context, a: ActionId) -> Result<f64> {
        a.check(self.num_actions())?;
        let x = self.encoder.encode(s)?;
        Ok(self.intercepts[a.0]
            + self.weights[a.0]
                .iter()
                .zip(&x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>())
    }

    pub fn select(&self, s: &Context, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<(ActionId, bool)> {
        let values: Vec<f64> = (0..self.num_actions())
            .map(|a| self.predict(s, ActionId(a)))
            .collect::<Result<_>>()?;
        Ok(select_action_values(&values, epsilon, rng))
    }

    /// One SGD step on the pulled arm only:
    /// `w_a += eta * (r - prediction) * x`, intercept likewise.
    pub fn update(&mut self, s: &Context, a: ActionId, r: Reward) -> Result<()> {
        a.check(self.num_actions())?;
        let x = self.encoder.encode(s)?;
        let prediction = self.intercepts[a.0]
            + self.weights[a.0]
                .iter()
                .zip(&x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>();
        let err = r.0 - prediction;
        let step = self.learning_rate * err;
        for (w, xi) in self.weights[a.0].iter_mut().zip(&x) {
            *w += step * xi;
        }
        self.intercepts[a.0] += step;
        Ok(())
    }
}
