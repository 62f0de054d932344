//! Block-protocol experiment runner: play the current policy for a block,
//! retrain the Q-function on all accumulated data, repeat; track regret per
//! step; aggregate reshuffled runs; write CSV results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, to_bandit, BanditStream, DatasetSchema, SupervisedDataset};
use crate::error::{Error, Result};
use crate::meta::{build_qmodel, search_design, Featurizer, QModel, SearchBudget};
use crate::policy::{
    epsilon_at, random_policy, select_action, EpsilonSchedule, OnlineLinearBaseline,
};
use crate::regret::{compute_regret, OracleValue, RegretSeries};
use crate::synthetic::{optimal_action, pull, reward_probability, sample_context, SyntheticEnvSpec};
use crate::types::{Episode, InteractionLog, Schema};
use crate::{derive_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentConfig {
    Synthetic(SyntheticEnvSpec),
    Dataset { schema: PathBuf, data: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyConfig {
    MetaLearner,
    Random,
    OnlineBaseline {
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
}

fn default_learning_rate() -> f64 {
    0.1
}

impl PolicyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::MetaLearner => "meta_learner",
            PolicyConfig::Random => "random",
            PolicyConfig::OnlineBaseline { .. } => "online_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub policy: PolicyConfig,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    pub n_blocks: usize,
    pub schedule: EpsilonSchedule,
    #[serde(default)]
    pub budget: SearchBudget,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub master_seed: u64,
    pub output_path: PathBuf,
    #[serde(default)]
    pub final_retrain: bool,
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
}

fn default_block_size() -> usize {
    500
}
fn default_runs() -> usize {
    1
}
fn default_ensemble_size() -> usize {
    3
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size < 1 || self.block_size > 1_000_000 {
            return Err(Error::Config(format!(
                "block_size {} outside [1, 10^6]",
                self.block_size
            )));
        }
        if self.n_blocks < 1 {
            return Err(Error::Config("n_blocks must be >= 1".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.ensemble_size < 1 {
            return Err(Error::Config("ensemble_size must be >= 1".into()));
        }
        self.budget.validate()?;
        if let EnvironmentConfig::Synthetic(spec) = &self.environment {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub regret: RegretSeries,
    pub log: InteractionLog,
    /// Held-out MAE after each retrain (empty for non-meta policies).
    pub block_mae: Vec<f64>,
    pub epsilon_trace: Vec<f64>,
    pub retrain_secs: Vec<f64>,
}

/// Pointwise mean and sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub mean_avg_regret: Vec<f64>,
    pub std_avg_regret: Vec<f64>,
    pub mean_cum_regret: Vec<f64>,
}

enum RunEnv {
    Synthetic(SyntheticEnvSpec),
    Dataset {
        stream: BanditStream,
        position: usize,
        k: usize,
        schema: Schema,
    },
}

impl RunEnv {
    fn schema(&self) -> Schema {
        match self {
            RunEnv::Synthetic(spec) => Schema::numeric(spec.d),
            RunEnv::Dataset { schema, .. } => schema.clone(),
        }
    }

    fn k(&self) -> usize {
        match self {
            RunEnv::Synthetic(spec) => spec.k,
            RunEnv::Dataset { k, .. } => *k,
        }
    }
}

enum PolicyState {
    Random,
    Meta {
        model: Option<QModel>,
        ensemble_size: usize,
    },
    Baseline(OnlineLinearBaseline),
}

/// Plays one block with the policy frozen (the online baseline updates every
/// step by design). Appends `block_size` episodes to the log and records one
/// oracle pair per step.
fn run_block(
    policy: &mut PolicyState,
    env: &mut RunEnv,
    block_size: usize,
    schedule: &EpsilonSchedule,
    block_index: usize,
    log: &mut InteractionLog,
    oracle_values: &mut Vec<OracleValue>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    if block_size == 0 {
        return Err(Error::Config("block_size must be >= 1".into()));
    }
    let k = env.k();
    for _ in 0..block_size {
        let t = log.len() + 1;

        let (context, hidden_label) = match env {
            RunEnv::Synthetic(spec) => (sample_context(spec, rng), 0usize),
            RunEnv::Dataset {
                stream, position, ..
            } => {
                let row = stream
                    .rows
                    .get(*position)
                    .ok_or(Error::StreamExhausted(t))?;
                *position += 1;
                (row.0.clone(), row.1)
            }
        };

        let scheduled_epsilon = epsilon_at(schedule, t, block_index);
        let (action, explored, epsilon_used) = match policy {
            PolicyState::Random => (random_policy(k, rng), true, 1.0),
            PolicyState::Meta { model: None, .. } => (random_policy(k, rng), true, 1.0),
            PolicyState::Meta {
                model: Some(q), ..
            } => {
                let (a, ex) = select_action(q, &context, scheduled_epsilon, rng)?;
                (a, ex, scheduled_epsilon)
            }
            PolicyState::Baseline(b) => {
                let (a, ex) = b.select(&context, scheduled_epsilon, rng)?;
                (a, ex, scheduled_epsilon)
            }
        };

        let (reward, oracle) = match env {
            RunEnv::Synthetic(spec) => {
                let reward = pull(spec, &context, action, rng)?;
                let (_, best_value) = optimal_action(spec, &context)?;
                let taken_value = reward_probability(spec, &context, action)?;
                (
                    reward,
                    OracleValue {
                        best_value,
                        taken_value,
                    },
                )
            }
            RunEnv::Dataset { .. } => {
                let reward = crate::dataset::pull_label(hidden_label, action, k)?;
                (
                    reward,
                    OracleValue {
                        best_value: 1.0,
                        taken_value: reward.0,
                    },
                )
            }
        };

        if let PolicyState::Baseline(b) = policy {
            b.update(&context, action, reward)?;
        }

        log.append_episode(Episode {
            t,
            context,
            action,
            reward,
            epsilon_used,
            explored,
        })?;
        oracle_values.push(oracle);
    }
    Ok(())
}

/// Retrains the Q-function on all accumulated episodes: a holdout fraction is
/// reserved (re-drawn under `split_seed`), the featurizer and candidate search
/// run on the remainder, and the held-out MAE of the resulting ensemble is
/// returned alongside it.
pub fn retrain(
    accumulated: &InteractionLog,
    budget: &SearchBudget,
    ensemble_size: usize,
    split_seed: u64,
) -> Result<(QModel, f64)> {
    if accumulated.is_empty() {
        return Err(Error::Data("cannot retrain on an empty log".into()));
    }
    let n = accumulated.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(split_seed);
    crate::dataset::fisher_yates(&mut order, &mut rng);
    let n_holdout = ((n as f64) * budget.holdout_fraction) as usize;
    let (holdout_idx, train_idx) = order.split_at(n_holdout);

    let episodes = accumulated.episodes();
    let train: Vec<_> = train_idx.iter().map(|&i| episodes[i].clone()).collect();
    let holdout: Vec<_> = holdout_idx.iter().map(|&i| episodes[i].clone()).collect();

    let featurizer = Featurizer::fit(
        &accumulated.schema,
        accumulated.k,
        train.iter().map(|e| &e.context),
    )?;
    let (x, y) = featurizer.design_matrix(&train)?;
    let ranked = search_design(&x, &y, budget)?;
    let q = build_qmodel(ranked, featurizer, ensemble_size)?;

    let holdout_mae = if holdout.is_empty() {
        f64::NAN
    } else {
        let (hx, hy) = q.featurizer.design_matrix(&holdout)?;
        hx.iter()
            .zip(&hy)
            .map(|(row, yi)| (q.predict_features(row) - yi).abs())
            .sum::<f64>()
            / hy.len() as f64
    };
    Ok((q, holdout_mae))
}

fn build_env(cfg: &ExperimentConfig, dataset: Option<&SupervisedDataset>, run_seed: u64) -> Result<RunEnv> {
    match &cfg.environment {
        EnvironmentConfig::Synthetic(spec) => Ok(RunEnv::Synthetic(spec.clone())),
        EnvironmentConfig::Dataset { .. } => {
            let ds = dataset.expect("dataset preloaded for dataset environments");
            let stream = to_bandit(ds, derive_seed(run_seed, 0))?;
            Ok(RunEnv::Dataset {
                k: ds.schema.k(),
                schema: ds.schema.feature_schema(),
                stream,
                position: 0,
            })
        }
    }
}

fn run_single(cfg: &ExperimentConfig, dataset: Option<&SupervisedDataset>, run: usize) -> Result<RunResult> {
    let run_seed = derive_seed(cfg.master_seed, run as u64 + 1);
    let mut env = build_env(cfg, dataset, run_seed)?;
    let mut rng = seeded_rng(derive_seed(run_seed, 1));

    let mut policy = match cfg.policy {
        PolicyConfig::Random => PolicyState::Random,
        PolicyConfig::MetaLearner => PolicyState::Meta {
            model: None,
            ensemble_size: cfg.ensemble_size,
        },
        PolicyConfig::OnlineBaseline { learning_rate } => PolicyState::Baseline(
            OnlineLinearBaseline::new(env.schema(), env.k(), learning_rate, cfg.schedule),
        ),
    };

    let mut log = InteractionLog::new(env.schema(), env.k());
    let mut oracle_values = Vec::with_capacity(cfg.block_size * cfg.n_blocks);
    let mut block_mae = Vec::new();
    let mut retrain_secs = Vec::new();

    for block in 1..=cfg.n_blocks {
        run_block(
            &mut policy,
            &mut env,
            cfg.block_size,
            &cfg.schedule,
            block,
            &mut log,
            &mut oracle_values,
            &mut rng,
        )
        .map_err(|e| Error::Data(format!("run {run}, block {block}: {e}")))?;

        let retrain_now = block < cfg.n_blocks || cfg.final_retrain;
        if retrain_now {
            if let PolicyState::Meta {
                model,
                ensemble_size,
            } = &mut policy
            {
                let budget = SearchBudget {
                    seed: derive_seed(run_seed, 2),
                    ..cfg.budget
                };
                let split_seed = derive_seed(run_seed, 100 + block as u64);
                let started = Instant::now();
                match retrain(&log, &budget, *ensemble_size, split_seed) {
                    Ok((q, mae)) => {
                        *model = Some(q);
                        block_mae.push(mae);
                        retrain_secs.push(started.elapsed().as_secs_f64());
                    }
                    Err(Error::Data(reason)) => {
                        // declared fallback: keep playing randomly next block
                        log::warn!("run {run}: retrain after block {block} skipped ({reason})");
                        *model = None;
                    }
                    Err(other) => return Err(other),
                }
            }
        }
    }

    let regret = compute_regret(&log, &oracle_values)?;
    let epsilon_trace = log.episodes().iter().map(|e| e.epsilon_used).collect();
    Ok(RunResult {
        regret,
        log,
        block_mae,
        epsilon_trace,
        retrain_secs,
    })
}

/// Executes all runs of a config. Runs are independent and executed in
/// parallel, but results are merged in run order, so output is deterministic
/// regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let dataset = match &cfg.environment {
        EnvironmentConfig::Synthetic(_) => None,
        EnvironmentConfig::Dataset { schema, data } => {
            let schema = DatasetSchema::from_json_file(schema)?;
            let ds = load_csv(data, &schema)?;
            let needed = cfg.block_size * cfg.n_blocks;
            if ds.rows.len() < needed {
                return Err(Error::Config(format!(
                    "dataset has {} rows but the protocol needs {needed}",
                    ds.rows.len()
                )));
            }
            Some(ds)
        }
    };
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_single(cfg, dataset.as_ref(), run))
        .collect()
}

/// Pointwise mean and sample standard deviation of the average-regret series,
/// plus the mean cumulative series.
pub fn aggregate_runs(results: &[RunResult]) -> Result<AggregateSeries> {
    if results.is_empty() {
        return Err(Error::Length("no runs to aggregate".into()));
    }
    let horizon = results[0].regret.horizon;
    if results.iter().any(|r| r.regret.horizon != horizon) {
        return Err(Error::Length("runs have different horizons".into()));
    }
    let n = results.len() as f64;
    let mut mean_avg = vec![0.0; horizon];
    let mut mean_cum = vec![0.0; horizon];
    for r in results {
        for t in 0..horizon {
            mean_avg[t] += r.regret.average_regret[t];
            mean_cum[t] += r.regret.cumulative_regret[t];
        }
    }
    for t in 0..horizon {
        mean_avg[t] /= n;
        mean_cum[t] /= n;
    }
    let mut std_avg = vec![0.0; horizon];
    if results.len() > 1 {
        for r in results {
            for t in 0..horizon {
                let d = r.regret.average_regret[t] - mean_avg[t];
                std_avg[t] += d * d;
            }
        }
        for s in &mut std_avg {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    Ok(AggregateSeries {
        mean_avg_regret: mean_avg,
        std_avg_regret: std_avg,
        mean_cum_regret: mean_cum,
    })
}

/// Writes `regret.csv`, per-run detail under `runs/`, `mae.csv`, and a JSON
/// manifest of the resolved config.
pub fn emit_results(
    aggregate: &AggregateSeries,
    results: &[RunResult],
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir.join("runs"))?;

    let mut regret = String::from("t,mean_avg_regret,std_avg_regret,mean_cum_regret\n");
    for t in 0..aggregate.mean_avg_regret.len() {
        regret.push_str(&format!(
            "{},{},{},{}\n",
            t + 1,
            aggregate.mean_avg_regret[t],
            aggregate.std_avg_regret[t],
            aggregate.mean_cum_regret[t]
        ));
    }
    std::fs::write(dir.join("regret.csv"), regret)?;

    for (i, r) in results.iter().enumerate() {
        let mut detail = String::from(
            "t,action,reward,epsilon,explored,per_step_regret,cumulative_regret,average_regret\n",
        );
        for (e, t) in r.log.episodes().iter().zip(0..) {
            detail.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.t,
                e.action.0,
                e.reward.0,
                e.epsilon_used,
                e.explored,
                r.regret.per_step_regret[t],
                r.regret.cumulative_regret[t],
                r.regret.average_regret[t]
            ));
        }
        std::fs::write(dir.join("runs").join(format!("{i}.csv")), detail)?;
    }

    let mut mae = String::from("block,mean_holdout_mae\n");
    if let Some(retrains) = results.iter().map(|r| r.block_mae.len()).min() {
        for b in 0..retrains {
            let mean: f64 =
                results.iter().map(|r| r.block_mae[b]).sum::<f64>() / results.len() as f64;
            mae.push_str(&format!("{},{}\n", b + 1, mean));
        }
    }
    std::fs::write(dir.join("mae.csv"), mae)?;

    let manifest = serde_json::to_string_pretty(cfg)?;
    std::fs::write(dir.join("manifest.json"), manifest)?;
    Ok(())
}

/// Runs the meta-learner, random, and online-baseline policies under one
/// config and writes a combined `regret.csv` keyed by a `policy` column.
pub fn compare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_path)?;
    let mut combined = String::from("policy,t,mean_avg_regret,std_avg_regret,mean_cum_regret\n");
    let policies = [
        PolicyConfig::MetaLearner,
        PolicyConfig::Random,
        PolicyConfig::OnlineBaseline {
            learning_rate: default_learning_rate(),
        },
    ];
    for policy in policies {
        let sub = ExperimentConfig {
            policy,
            output_path: cfg.output_path.join(policy.name()),
            ..cfg.clone()
        };
        let results = run_experiment(&sub)?;
        let aggregate = aggregate_runs(&results)?;
        emit_results(&aggregate, &results, &sub, &sub.output_path)?;
        for t in 0..aggregate.mean_avg_regret.len() {
            combined.push_str(&format!(
                "{},{},{},{},{}\n",
                policy.name(),
                t + 1,
                aggregate.mean_avg_regret[t],
                aggregate.std_avg_regret[t],
                aggregate.mean_cum_regret[t]
            ));
        }
    }
    std::fs::write(cfg.output_path.join("regret.csv"), combined)?;
    std::fs::write(
        cfg.output_path.join("manifest.json"),
        serde_json::to_string_pretty(cfg)?,
    )?;
    Ok(())
}
