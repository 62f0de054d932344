//! Desk-scale model-search pipeline: automated featurization, candidate
//! search with hyper-parameter grids, cross-validated selection by MAE, and
//! top-k ensembling into a Q-function.

pub mod featurizer;
pub mod importance;
pub mod models;
pub mod search;
pub mod tree;

pub use featurizer::{fit_featurizer, Featurizer};
pub use importance::feature_importance;
pub use models::{candidate_grid, fit_candidate, CandidateSpec, FittedModel, ModelArtifact};
pub use search::{build_qmodel, cross_validate, predict_q, search, search_design, QModel, SearchBudget};
