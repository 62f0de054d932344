//! Supervised-to-bandit reduction: class labels become arms and the reward is
//! 1 iff the chosen arm equals the hidden label. Rows are reshuffled per run.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, Context, FeatureKind, FeatureValue, Reward, Schema, SchemaColumn};

/// Declared layout of a dataset CSV: feature columns, the label column, and
/// the ordered class vocabulary (class index = action index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<SchemaColumn>,
    pub label_column: String,
    pub classes: Vec<String>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::Config("schema needs at least 2 classes".into()));
        }
        if self.columns.iter().any(|c| c.name == self.label_column) {
            return Err(Error::Config(format!(
                "label column '{}' also listed as a feature",
                self.label_column
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_schema(&self) -> Schema {
        Schema {
            columns: self.columns.clone(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: DatasetSchema = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }
}

/// Parsed dataset: every row is a typed context plus its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset {
    pub schema: DatasetSchema,
    pub rows: Vec<(Context, usize)>,
}

/// A shuffled play order over the dataset. The label stays hidden from the
/// policy until after action selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditStream {
    pub rows: Vec<(Context, usize)>,
    pub shuffle_seed: u64,
}

/// Loads and validates a CSV file against a schema. Rows with missing (empty)
/// cells are dropped with a logged count.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<SupervisedDataset> {
    schema.validate()?;
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader.headers()?.clone();
    let mut expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    expected.push(&schema.label_column);
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "header mismatch: file has {got:?}, schema expects {expected:?}"
        )));
    }

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_number = row_idx + 2; // 1-based, after the header line
        if record.iter().any(|cell| cell.is_empty()) {
            dropped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(schema.columns.len());
        for (cell, column) in record.iter().zip(&schema.columns) {
            match column.kind {
                FeatureKind::Numeric => {
                    let v: f64 = cell.parse().map_err(|e| Error::Parse {
                        row: row_number,
                        column: column.name.clone(),
                        message: format!("{e}"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            row: row_number,
                            column: column.name.clone(),
                            message: format!("non-finite value {v}"),
                        });
                    }
                    values.push(FeatureValue::Numeric(v));
                }
                FeatureKind::Categorical => values.push(FeatureValue::Categorical(cell.to_string())),
            }
        }
        let label_token = &record[schema.columns.len()];
        let label = schema
            .classes
            .iter()
            .position(|c| c == label_token)
            .ok_or_else(|| {
                Error::Schema(format!(
                    "row {row_number}: class token '{label_token}' not in schema classes"
                ))
            })?;
        rows.push((Context { values }, label));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing values from {}", path.display());
    }
    Ok(SupervisedDataset {
        schema: schema.clone(),
        rows,
    })
}

/// Fisher-Yates shuffle of the dataset rows under `shuffle_seed`. For step i
/// from n-1 down to 1 the swap target is `floor(u * (i+1))` with `u` the next
/// uniform draw.
pub fn to_bandit(ds: &SupervisedDataset, shuffle_seed: u64) -> Result<BanditStream> {
    if ds.rows.is_empty() {
        return Err(Error::Config("cannot stream an empty dataset".into()));
    }
    let mut rows = ds.rows.clone();
    let mut rng = crate::seeded_rng(shuffle_seed);
    fisher_yates(&mut rows, &mut rng);
    Ok(BanditStream {
        rows,
        shuffle_seed,
    })
}

pub(crate) fn fisher_yates<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let u = rng.random::<f64>();
        let j = (u * (i + 1) as f64) as usize;
        items.swap(i, j.min(i));
    }
}

/// Reward of the reduction: 1 iff the chosen arm equals the hidden label.
pub fn pull_label(hidden_label: usize, a: ActionId, k: usize) -> Result<Reward> {
    a.check(k)?;
    Ok(Reward(if a.0 == hidden_label { 1.0 } else { 0.0 }))
}
