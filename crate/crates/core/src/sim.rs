//! Simulation runner: plays a learner against an environment for `T` rounds,
//! accounts regret and oracle calls, and writes CSV / JSON outputs.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algo::Learner;
use crate::config::EnvInstance;
pub use crate::config::RunConfig;
use crate::domain::{ActionIndex, InteractionLog};
use crate::env::{derive_seed, Environment, ENVIRONMENT_STREAM, LEARNER_STREAM};
use crate::oracle::Model;
use crate::schedule::EpochSchedule;
use crate::{Error, Result};

/// Exact CSV header of per-round output.
pub const CSV_HEADER: &str =
    "round,epoch,gamma,context,action,reward,inst_regret,cum_regret,oracle_calls";

/// High-probability FALCON regret bound
/// `608.5 sqrt(K T ln(|F| T / delta)) + sqrt(8 T ln(2 / delta)) + tau_1`.
pub fn regret_bound(
    num_actions: usize,
    horizon: u64,
    class_size: usize,
    delta: f64,
    tau_1: u64,
) -> f64 {
    let k = num_actions as f64;
    let t = horizon as f64;
    608.5 * (k * t * (class_size as f64 * t / delta).ln()).sqrt()
        + (8.0 * t * (2.0 / delta).ln()).sqrt()
        + tau_1 as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub epoch: usize,
    pub gamma: f64,
    /// Context index for finite environments.
    pub context: Option<usize>,
    pub action: ActionIndex,
    pub reward: f64,
    /// `r_t(pi_{f*}(x_t))`.
    pub optimal_reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Running sum of hidden-mean gaps.
    pub cum_pseudo_regret: f64,
    pub oracle_calls: u64,
}

/// The frozen decision rule of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub first_round: u64,
    pub gamma: f64,
    pub model: Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunTotals {
    pub rounds: u64,
    pub epochs: usize,
    pub oracle_calls: u64,
    pub clamp_events: u64,
    pub final_regret: f64,
    pub final_pseudo_regret: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    pub epochs: Vec<EpochRecord>,
    pub totals: RunTotals,
    /// Bound evaluated at `T` for finite classes with a confidence level.
    pub bound: Option<f64>,
    pub wall_time: Duration,
}

impl PartialEq for RunResult {
    /// Wall time is excluded.
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.records == other.records
            && self.epochs == other.epochs
            && self.totals == other.totals
            && self.bound == other.bound
    }
}

impl RunResult {
    pub fn final_regret(&self) -> f64 {
        self.totals.final_regret
    }

    /// Mean per-round regret over rounds `first..=last`, from logged records.
    pub fn mean_regret(&self, first: u64, last: u64) -> f64 {
        let (sum, n) = self
            .records
            .iter()
            .filter(|r| r.round >= first && r.round <= last)
            .fold((0.0, 0u64), |(s, n), r| (s + r.inst_regret, n + 1));
        sum / n as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let context = r.context.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.round,
                r.epoch,
                r.gamma,
                context,
                r.action,
                r.reward,
                r.inst_regret,
                r.cum_regret,
                r.oracle_calls
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Runs `config` with its own seed.
pub fn run(config: &RunConfig) -> Result<RunResult> {
    run_seed(config, config.seed)
}

/// Runs `config` with `seed` in place of the configured seed.
pub fn run_seed(config: &RunConfig, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let env = config.build_environment(seed)?;
    let schedule = config.build_schedule()?;
    let horizon = config.horizon()?;
    let bound = match (env.class_size(), config.algorithm.delta()) {
        (Some(size), Some(delta)) => Some(regret_bound(
            env.num_actions(),
            horizon,
            size,
            delta,
            schedule.boundary(1).unwrap(),
        )),
        _ => None,
    };
    let mut result = play(config, &env, schedule, horizon, seed)?;
    result.bound = bound;
    Ok(result)
}

/// Plays `horizon` rounds of the configured algorithm on a prebuilt
/// environment.
pub fn play(
    config: &RunConfig,
    env: &EnvInstance,
    schedule: EpochSchedule,
    horizon: u64,
    seed: u64,
) -> Result<RunResult> {
    let started = Instant::now();
    let log_every = config.log_every();
    let mut learner = Learner::new(config.algorithm, env.oracle(), schedule, env.num_actions())?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ENVIRONMENT_STREAM));
    let mut learner_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, LEARNER_STREAM));

    let mut log = InteractionLog::new();
    let mut records = Vec::with_capacity((horizon / log_every) as usize + 1);
    let mut epochs = vec![EpochRecord {
        epoch: 1,
        first_round: 1,
        gamma: learner.gamma(),
        model: learner.model().clone(),
    }];
    let mut scratch = Vec::new();
    let mut cum_regret = 0.0;
    let mut cum_pseudo = 0.0;
    let mut clamp_events = 0;

    for t in 1..=horizon {
        let end = learner.epoch_end().ok_or(Error::ScheduleExhausted {
            round: t,
            last: t - 1,
        })?;
        if t > end {
            log.close_epoch();
            learner.advance_epoch(&log)?;
            epochs.push(EpochRecord {
                epoch: learner.epoch(),
                first_round: t,
                gamma: learner.gamma(),
                model: learner.model().clone(),
            });
        }
        let draw = env.sample_round(&mut env_rng);
        let (action, _dist, clamps) = learner.step(&draw.context, &mut learner_rng, &mut scratch);
        clamp_events += clamps;
        let reward = draw.rewards[action];
        let optimal_reward = draw.rewards[draw.optimal];
        let inst_regret = optimal_reward - reward;
        cum_regret += inst_regret;
        cum_pseudo += draw.means[draw.optimal] - draw.means[action];
        let context = draw.context.index();
        log.push(draw.context, action, reward);
        if t % log_every == 0 || t == horizon {
            records.push(RoundRecord {
                round: t,
                epoch: learner.epoch(),
                gamma: learner.gamma(),
                context,
                action,
                reward,
                optimal_reward,
                inst_regret,
                cum_regret,
                cum_pseudo_regret: cum_pseudo,
                oracle_calls: learner.oracle_calls(),
            });
        }
    }

    Ok(RunResult {
        seed,
        records,
        totals: RunTotals {
            rounds: horizon,
            epochs: learner.epoch(),
            oracle_calls: learner.oracle_calls(),
            clamp_events,
            final_regret: cum_regret,
            final_pseudo_regret: cum_pseudo,
        },
        epochs,
        bound: None,
        wall_time: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRegret {
    pub seed: u64,
    pub final_regret: f64,
}

/// Aggregate of a replication batch, serialized as the summary document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub per_seed_final_regrets: Vec<SeedRegret>,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
    pub theoretical_bound: Option<f64>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary always serializes")
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(config: &RunConfig, runs: &[RunResult]) -> Summary {
    let mut per_seed: Vec<SeedRegret> = runs
        .iter()
        .map(|r| SeedRegret {
            seed: r.seed,
            final_regret: r.final_regret(),
        })
        .collect();
    per_seed.sort_by_key(|s| s.seed);
    let mut values: Vec<f64> = per_seed.iter().map(|s| s.final_regret).collect();
    // seed order keeps the mean independent of completion order
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    Summary {
        config: config.clone(),
        per_seed_final_regrets: per_seed,
        mean,
        p10: quantile(&values, 0.1),
        p90: quantile(&values, 0.9),
        theoretical_bound: runs.first().and_then(|r| r.bound),
    }
}

/// Independent runs for every seed, executed in parallel.
pub fn replicate(config: &RunConfig, seeds: &[u64]) -> Result<(Summary, Vec<RunResult>)> {
    if seeds.is_empty() {
        return Err(Error::config("replicate.seeds", "need at least one seed"));
    }
    config.validate()?;
    let mut runs = seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.seed);
    Ok((summarize(config, &runs), runs))
}
