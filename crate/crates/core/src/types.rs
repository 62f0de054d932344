//! Domain types shared by every environment and policy: contexts, actions,
//! rewards, and the append-only interaction log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One feature value inside a context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

impl FeatureValue {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureValue::Numeric(_) => FeatureKind::Numeric,
            FeatureValue::Categorical(_) => FeatureKind::Categorical,
        }
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            FeatureValue::Numeric(v) => Some(*v),
            FeatureValue::Categorical(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// Per-environment feature schema: name and kind of every context column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<SchemaColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: FeatureKind,
}

impl Schema {
    /// All-numeric schema with columns named `f0..f{d-1}`, as produced by the
    /// synthetic environment.
    pub fn numeric(d: usize) -> Self {
        Schema {
            columns: (0..d)
                .map(|i| SchemaColumn {
                    name: format!("f{i}"),
                    kind: FeatureKind::Numeric,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Checks that a context has the right arity, per-position kinds, and
    /// finite numeric values.
    pub fn validate(&self, context: &Context) -> Result<()> {
        if context.values.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "context has {} features, schema expects {}",
                context.values.len(),
                self.columns.len()
            )));
        }
        for (value, column) in context.values.iter().zip(&self.columns) {
            if value.kind() != column.kind {
                return Err(Error::Schema(format!(
                    "column '{}' expects {:?}",
                    column.name, column.kind
                )));
            }
            if let FeatureValue::Numeric(v) = value {
                if !v.is_finite() {
                    return Err(Error::Schema(format!(
                        "column '{}' holds non-finite value {v}",
                        column.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The observed state `s_t`: an ordered sequence of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub values: Vec<FeatureValue>,
}

impl Context {
    pub fn numeric(values: Vec<f64>) -> Self {
        Context {
            values: values.into_iter().map(FeatureValue::Numeric).collect(),
        }
    }

    /// Numeric view of an all-numeric context; errors on categorical entries.
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .map(|v| {
                v.as_numeric()
                    .ok_or_else(|| Error::Schema("expected numeric context".into()))
            })
            .collect()
    }
}

/// Index of the arm pulled, in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn check(&self, k: usize) -> Result<()> {
        if self.0 >= k {
            Err(Error::Action { index: self.0, k })
        } else {
            Ok(())
        }
    }
}

/// Scalar reward in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reward(pub f64);

impl Reward {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Data(format!("reward {value} outside [0,1]")));
        }
        Ok(Reward(value))
    }
}

/// One interaction triple plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// 1-based step index within the log.
    pub t: usize,
    pub context: Context,
    pub action: ActionId,
    pub reward: Reward,
    pub epsilon_used: f64,
    pub explored: bool,
}

/// Append-only record of all episodes in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLog {
    pub schema: Schema,
    pub k: usize,
    episodes: Vec<Episode>,
}

impl InteractionLog {
    pub fn new(schema: Schema, k: usize) -> Self {
        InteractionLog {
            schema,
            k,
            episodes: Vec::new(),
        }
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn append_episode(&mut self, e: Episode) -> Result<()> {
        self.schema.validate(&e.context)?;
        e.action.check(self.k)?;
        if e.t != self.episodes.len() + 1 {
            return Err(Error::Data(format!(
                "episode t={} appended to log of length {}",
                e.t,
                self.episodes.len()
            )));
        }
        self.episodes.push(e);
        Ok(())
    }

    /// Writes the log as CSV: `t,action,reward,epsilon,explored,f0,f1,...`
    /// with feature columns named from the schema.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "t".to_string(),
            "action".to_string(),
            "reward".to_string(),
            "epsilon".to_string(),
            "explored".to_string(),
        ];
        header.extend(self.schema.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for e in &self.episodes {
            let mut record = vec![
                e.t.to_string(),
                e.action.0.to_string(),
                format!("{}", e.reward.0),
                format!("{}", e.epsilon_used),
                e.explored.to_string(),
            ];
            for v in &e.context.values {
                match v {
                    FeatureValue::Numeric(x) => record.push(format!("{x}")),
                    FeatureValue::Categorical(s) => record.push(s.clone()),
                }
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn episode(t: usize, action: usize) -> Episode {
        Episode {
            t,
            context: Context::numeric(vec![0.5]),
            action: ActionId(action),
            reward: Reward(1.0),
            epsilon_used: 0.1,
            explored: false,
        }
    }

    #[test]
    fn append_to_empty_log() {
        let mut log = InteractionLog::new(Schema::numeric(1), 2);
        log.append_episode(episode(1, 0)).unwrap();
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn append_extends_by_one() {
        let mut log = InteractionLog::new(Schema::numeric(1), 2);
        log.append_episode(episode(1, 0)).unwrap();
        log.append_episode(episode(2, 1)).unwrap();
        log.append_episode(episode(3, 0)).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.episodes()[1].t, 2);
    }

    #[test]
    fn out_of_range_action_rejected() {
        let mut log = InteractionLog::new(Schema::numeric(1), 2);
        let err = log.append_episode(episode(1, 5)).unwrap_err();
        assert!(matches!(err, Error::Action { index: 5, k: 2 }));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let mut log = InteractionLog::new(Schema::numeric(2), 2);
        let err = log.append_episode(episode(1, 0)).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn non_finite_feature_rejected() {
        let schema = Schema::numeric(1);
        let bad = Context::numeric(vec![f64::NAN]);
        assert!(schema.validate(&bad).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let mut log = InteractionLog::new(Schema::numeric(2), 2);
        log.append_episode(Episode {
            t: 1,
            context: Context::numeric(vec![0.25, 0.75]),
            action: ActionId(1),
            reward: Reward(0.0),
            epsilon_used: 0.9,
            explored: true,
        })
        .unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,action,reward,epsilon,explored,f0,f1");
        assert_eq!(lines.next().unwrap(), "1,1,0,0.9,true,0.25,0.75");
    }
}
