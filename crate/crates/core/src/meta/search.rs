//! Candidate search: cross-validated MAE over the hyper-parameter grid,
//! deterministic ranking, and a top-k uniform-average ensemble (the
//! Q-function).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::featurizer::{fit_featurizer, Featurizer};
use super::models::{candidate_grid, fit_candidate, CandidateSpec, ModelArtifact};
use crate::dataset::fisher_yates;
use crate::error::{Error, Result};
use crate::types::{ActionId, Context, InteractionLog};

/// Search effort knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_candidates: usize,
    pub cv_folds: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_candidates: 13,
            cv_folds: 5,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_candidates < 1 {
            return Err(Error::Config("max_candidates must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config("holdout_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Cross-validated mean absolute error of one candidate: rows are shuffled
/// once under the seed, split into contiguous folds, and the per-fold MAEs
/// averaged.
pub fn cross_validate(
    candidate: CandidateSpec,
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if y.len() < folds {
        return Err(Error::Data(format!(
            "{} rows cannot fill {} folds",
            y.len(),
            folds
        )));
    }
    let assignment = fold_assignment(y.len(), folds, seed);
    cross_validate_with_folds(candidate, x, y, &assignment, folds)
}

/// Shuffled fold index per row; shared across candidates so their scores are
/// comparable.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = crate::seeded_rng(seed);
    fisher_yates(&mut order, &mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos * folds / n;
    }
    assignment
}

fn cross_validate_with_folds(
    candidate: CandidateSpec,
    x: &[Vec<f64>],
    y: &[f64],
    assignment: &[usize],
    folds: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for fold in 0..folds {
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut test_idx = Vec::new();
        for (i, &f) in assignment.iter().enumerate() {
            if f == fold {
                test_idx.push(i);
            } else {
                train_x.push(x[i].clone());
                train_y.push(y[i]);
            }
        }
        let model = fit_candidate(candidate, &train_x, &train_y)?;
        let mae: f64 = test_idx
            .iter()
            .map(|&i| (model.predict(&x[i]) - y[i]).abs())
            .sum::<f64>()
            / test_idx.len() as f64;
        total += mae;
    }
    Ok(total / folds as f64)
}

/// Runs the grid search on a prebuilt design matrix. Candidates are scored by
/// CV in parallel but merged in canonical grid order, then each survivor is
/// refit on the full data. Ranking is by ascending cv_mae with the grid
/// position as tie-break (simpler families and smaller hyper-parameters win).
pub fn search_design(
    x: &[Vec<f64>],
    y: &[f64],
    budget: &SearchBudget,
) -> Result<Vec<ModelArtifact>> {
    budget.validate()?;
    if y.len() < 2 * budget.cv_folds {
        return Err(Error::Data(format!(
            "{} rows are too few for {}-fold search",
            y.len(),
            budget.cv_folds
        )));
    }
    let grid = candidate_grid();
    let chosen: Vec<(usize, CandidateSpec)> = if budget.max_candidates >= grid.len() {
        grid.into_iter().enumerate().collect()
    } else {
        // seeded sampling without replacement, grid order preserved
        let mut indices: Vec<usize> = (0..grid.len()).collect();
        let mut rng = crate::seeded_rng(budget.seed);
        fisher_yates(&mut indices, &mut rng);
        let mut keep: Vec<usize> = indices[..budget.max_candidates].to_vec();
        keep.sort_unstable();
        keep.into_iter().map(|i| (i, grid[i])).collect()
    };

    let assignment = fold_assignment(y.len(), budget.cv_folds, budget.seed);
    let mut scored: Vec<(usize, ModelArtifact)> = chosen
        .into_par_iter()
        .map(|(grid_idx, candidate)| {
            let cv_mae =
                cross_validate_with_folds(candidate, x, y, &assignment, budget.cv_folds)?;
            let model = fit_candidate(candidate, x, y)?;
            Ok((
                grid_idx,
                ModelArtifact {
                    candidate,
                    model,
                    cv_mae,
                },
            ))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|(ia, a), (ib, b)| {
        a.cv_mae
            .partial_cmp(&b.cv_mae)
            .unwrap()
            .then(ia.cmp(ib))
    });
    Ok(scored.into_iter().map(|(_, artifact)| artifact).collect())
}

/// Full search from an interaction log: fit the featurizer, build the design
/// matrix, and rank the grid.
pub fn search(log: &InteractionLog, budget: &SearchBudget) -> Result<Vec<ModelArtifact>> {
    let featurizer = fit_featurizer(log)?;
    let (x, y) = featurizer.design_matrix(log.episodes())?;
    search_design(&x, &y, budget)
}

/// The fitted Q-function: a featurizer plus the top-k artifacts averaged
/// uniformly, with the output clipped to `[0, 1]` after averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QModel {
    pub featurizer: Featurizer,
    pub members: Vec<ModelArtifact>,
    pub k_ensemble: usize,
}

pub fn build_qmodel(
    ranked: Vec<ModelArtifact>,
    featurizer: Featurizer,
    k_ensemble: usize,
) -> Result<QModel> {
    if ranked.is_empty() {
        return Err(Error::Config("cannot build a QModel from no artifacts".into()));
    }
    if k_ensemble < 1 {
        return Err(Error::Config("ensemble size must be >= 1".into()));
    }
    let take = k_ensemble.min(ranked.len());
    Ok(QModel {
        featurizer,
        members: ranked.into_iter().take(take).collect(),
        k_ensemble,
    })
}

impl QModel {
    /// Ensemble prediction on an already featurized row.
    pub fn predict_features(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.members.iter().map(|m| m.model.predict(x)).sum();
        (sum / self.members.len() as f64).clamp(0.0, 1.0)
    }

    pub fn num_actions(&self) -> usize {
        self.featurizer.k
    }
}

/// Expected reward of action `a` in context `s` under the fitted ensemble.
pub fn predict_q(q: &QModel, s: &Context, a: ActionId) -> Result<f64> {
    let x = q.featurizer.transform(s, a)?;
    Ok(q.predict_features(&x))
}
