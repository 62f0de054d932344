//! Regret accounting: per-step gap between the pointwise-optimal policy's
//! value and the value actually obtained, with cumulative and average series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::InteractionLog;

/// Per-step, cumulative, and average regret over a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub per_step_regret: Vec<f64>,
    pub cumulative_regret: Vec<f64>,
    pub average_regret: Vec<f64>,
    pub horizon: usize,
}

/// Oracle value pair for one step: what the best action was worth and what
/// the taken action was worth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub best_value: f64,
    pub taken_value: f64,
}

impl RegretSeries {
    pub fn from_per_step(per_step: Vec<f64>) -> Self {
        let horizon = per_step.len();
        let mut cumulative = Vec::with_capacity(horizon);
        let mut average = Vec::with_capacity(horizon);
        let mut sum = 0.0;
        for (i, r) in per_step.iter().enumerate() {
            sum += r;
            cumulative.push(sum);
            average.push(sum / (i + 1) as f64);
        }
        RegretSeries {
            per_step_regret: per_step,
            cumulative_regret: cumulative,
            average_regret: average,
            horizon,
        }
    }
}

/// Computes the regret series for a log given one oracle pair per episode.
pub fn compute_regret(log: &InteractionLog, oracle_values: &[OracleValue]) -> Result<RegretSeries> {
    if oracle_values.len() != log.len() {
        return Err(Error::Length(format!(
            "{} oracle values for a log of {} episodes",
            oracle_values.len(),
            log.len()
        )));
    }
    let per_step = oracle_values
        .iter()
        .map(|o| o.best_value - o.taken_value)
        .collect();
    Ok(RegretSeries::from_per_step(per_step))
}
