//! Permutation feature importance: how much the ensemble's MAE degrades when
//! one input column is shuffled. Used to audit a trained Q-function for label
//! proxies.

use rand_chacha::ChaCha8Rng;

use super::search::QModel;
use crate::dataset::fisher_yates;
use crate::error::{Error, Result};

const REPETITIONS: usize = 5;

/// Importance scores, one per input column plus one aggregated score for the
/// action one-hot block (last entry). Each score is the mean MAE increase over
/// 5 seeded shuffles of that column's featurized block.
pub fn feature_importance(
    q: &QModel,
    x: &[Vec<f64>],
    y: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Data("importance needs a nonempty (X, y) pair".into()));
    }
    let baseline = mae(q, x, y);
    let mut blocks = q.featurizer.column_ranges();
    blocks.push(q.featurizer.action_range());

    let n = x.len();
    let mut scores = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let mut total = 0.0;
        for _ in 0..REPETITIONS {
            let mut perm: Vec<usize> = (0..n).collect();
            fisher_yates(&mut perm, rng);
            // move the whole block jointly so one-hot groups stay coherent
            let mut shuffled: Vec<Vec<f64>> = x.to_vec();
            for (i, row) in shuffled.iter_mut().enumerate() {
                row[block.clone()].copy_from_slice(&x[perm[i]][block.clone()]);
            }
            total += mae(q, &shuffled, y) - baseline;
        }
        scores.push(total / REPETITIONS as f64);
    }
    Ok(scores)
}

fn mae(q: &QModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, yi)| (q.predict_features(row) - yi).abs())
        .sum::<f64>()
        / y.len() as f64
}
