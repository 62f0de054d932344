//! Automated featurization: numeric columns are standardized with statistics
//! from the training data, categorical columns are one-hot encoded over the
//! training vocabulary, and the action is one-hot encoded over K.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, Context, FeatureValue, InteractionLog, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnTransform {
    /// `(x - mean) / std`; a zero-variance column always emits 0.
    Standardize { mean: f64, std: f64 },
    /// One-hot over the sorted training vocabulary; unseen tokens map to
    /// all-zeros.
    OneHot { vocab: Vec<String> },
}

impl ColumnTransform {
    fn width(&self) -> usize {
        match self {
            ColumnTransform::Standardize { .. } => 1,
            ColumnTransform::OneHot { vocab } => vocab.len(),
        }
    }
}

/// Fitted context-and-action encoder. Transform parameters come only from the
/// data passed to `fit`; the output width is fixed afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub schema: Schema,
    pub k: usize,
    pub transforms: Vec<ColumnTransform>,
}

impl Featurizer {
    pub fn fit<'a>(
        schema: &Schema,
        k: usize,
        contexts: impl Iterator<Item = &'a Context> + Clone,
    ) -> Result<Self> {
        let mut transforms = Vec::with_capacity(schema.len());
        for (idx, _column) in schema.columns.iter().enumerate() {
            let mut numeric: Vec<f64> = Vec::new();
            let mut vocab: BTreeSet<String> = BTreeSet::new();
            let mut saw_any = false;
            for context in contexts.clone() {
                saw_any = true;
                match &context.values[idx] {
                    FeatureValue::Numeric(v) => numeric.push(*v),
                    FeatureValue::Categorical(s) => {
                        vocab.insert(s.clone());
                    }
                }
            }
            if !saw_any {
                return Err(Error::Data("cannot fit featurizer on empty data".into()));
            }
            if !numeric.is_empty() {
                let n = numeric.len() as f64;
                let mean = numeric.iter().sum::<f64>() / n;
                let var = numeric.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                transforms.push(ColumnTransform::Standardize {
                    mean,
                    std: var.sqrt(),
                });
            } else {
                transforms.push(ColumnTransform::OneHot {
                    vocab: vocab.into_iter().collect(),
                });
            }
        }
        Ok(Featurizer {
            schema: schema.clone(),
            k,
            transforms,
        })
    }

    pub fn width(&self) -> usize {
        self.transforms.iter().map(|t| t.width()).sum::<usize>() + self.k
    }

    /// Output column range of each input column, in order.
    pub fn column_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = Vec::with_capacity(self.transforms.len());
        let mut start = 0;
        for t in &self.transforms {
            ranges.push(start..start + t.width());
            start += t.width();
        }
        ranges
    }

    /// Output column range of the action one-hot block (always last).
    pub fn action_range(&self) -> Range<usize> {
        let w = self.width();
        w - self.k..w
    }

    pub fn transform(&self, context: &Context, action: ActionId) -> Result<Vec<f64>> {
        self.schema.validate(context)?;
        action.check(self.k)?;
        let mut out = Vec::with_capacity(self.width());
        for (value, transform) in context.values.iter().zip(&self.transforms) {
            match (value, transform) {
                (FeatureValue::Numeric(v), ColumnTransform::Standardize { mean, std }) => {
                    out.push(if *std > 0.0 { (v - mean) / std } else { 0.0 });
                }
                (FeatureValue::Categorical(s), ColumnTransform::OneHot { vocab }) => {
                    let hit = vocab.binary_search(s).ok();
                    for i in 0..vocab.len() {
                        out.push(if hit == Some(i) { 1.0 } else { 0.0 });
                    }
                }
                _ => return Err(Error::Schema("feature kind does not match transform".into())),
            }
        }
        for i in 0..self.k {
            out.push(if i == action.0 { 1.0 } else { 0.0 });
        }
        Ok(out)
    }

    /// Builds the design matrix and reward targets for a slice of episodes.
    pub fn design_matrix(
        &self,
        episodes: &[crate::types::Episode],
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut x = Vec::with_capacity(episodes.len());
        let mut y = Vec::with_capacity(episodes.len());
        for e in episodes {
            x.push(self.transform(&e.context, e.action)?);
            y.push(e.reward.0);
        }
        Ok((x, y))
    }
}

/// Fits a featurizer from an interaction log's contexts.
pub fn fit_featurizer(log: &InteractionLog) -> Result<Featurizer> {
    if log.is_empty() {
        return Err(Error::Data("cannot fit featurizer on an empty log".into()));
    }
    Featurizer::fit(
        &log.schema,
        log.k,
        log.episodes().iter().map(|e| &e.context),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FeatureKind, SchemaColumn};
    use approx::assert_abs_diff_eq;

    fn cat_schema() -> Schema {
        Schema {
            columns: vec![SchemaColumn {
                name: "color".into(),
                kind: FeatureKind::Categorical,
            }],
        }
    }

    fn cat(token: &str) -> Context {
        Context {
            values: vec![FeatureValue::Categorical(token.into())],
        }
    }

    #[test]
    fn two_point_standardization() {
        let schema = Schema::numeric(1);
        let data = [Context::numeric(vec![0.0]), Context::numeric(vec![2.0])];
        let f = Featurizer::fit(&schema, 1, data.iter()).unwrap();
        let lo = f.transform(&data[0], ActionId(0)).unwrap();
        let hi = f.transform(&data[1], ActionId(0)).unwrap();
        assert_abs_diff_eq!(lo[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn categorical_vocabulary_width() {
        let data = [cat("red"), cat("blue")];
        let f = Featurizer::fit(&cat_schema(), 1, data.iter()).unwrap();
        assert_eq!(f.width(), 2 + 1);
        let red = f.transform(&cat("red"), ActionId(0)).unwrap();
        assert_eq!(&red[..2], &[0.0, 1.0]); // vocab sorted: blue, red
    }

    #[test]
    fn zero_variance_column_emits_zero() {
        let schema = Schema::numeric(1);
        let data = [
            Context::numeric(vec![5.0]),
            Context::numeric(vec![5.0]),
            Context::numeric(vec![5.0]),
        ];
        let f = Featurizer::fit(&schema, 1, data.iter()).unwrap();
        for c in &data {
            assert_eq!(f.transform(c, ActionId(0)).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn unseen_token_maps_to_zeros() {
        let data = [cat("red"), cat("blue")];
        let f = Featurizer::fit(&cat_schema(), 2, data.iter()).unwrap();
        let out = f.transform(&cat("green"), ActionId(1)).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn action_block_is_last() {
        let schema = Schema::numeric(2);
        let data = [Context::numeric(vec![0.0, 1.0])];
        let f = Featurizer::fit(&schema, 3, data.iter()).unwrap();
        assert_eq!(f.action_range(), 2..5);
        assert_eq!(f.column_ranges(), vec![0..1, 1..2]);
    }
}
