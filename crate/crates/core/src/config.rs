//! Run configuration and its TOML representation.
//!
//! A config file is a single TOML document:
//!
//! ```toml
//! horizon = 20000          # rounds T
//! seed = 7                 # 64-bit run seed
//!
//! [algorithm]              # falcon | falcon_plus | epsilon_greedy | uniform
//! kind = "falcon"
//! delta = 0.05
//!
//! [environment]            # planted | explicit | linear
//! kind = "planted"
//! contexts = 20
//! actions = 5
//! class_size = 50
//! gap = 0.2
//!
//! [schedule]               # geometric | known_horizon | custom
//! kind = "geometric"
//!
//! [output]                 # all optional
//! csv = "run.csv"
//! summary = "summary.json"
//! plot = "regret.svg"
//! log_every = 1
//! ```
//!
//! `falcon_plus` additionally takes an `[algorithm.xi]` table
//! (`kind = "finite_class" | "linear" | "constant"`), `epsilon_greedy` takes
//! `epsilon`. A `linear` environment takes `dim`, `actions` and an optional
//! `ridge`. An `explicit` environment lists `context_probs`, `tables`
//! (one `|X| x K` table per class member) and `star`. Planted and linear
//! environments accept an optional `instance_seed`; without it the instance
//! is derived from the run seed. `[replicate]` takes `count` or an explicit
//! `seeds` list, and `[verify]` takes `mc_samples`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;
use crate::domain::{FiniteFunctionClass, TablePredictor};
use crate::env::{
    derive_seed, make_planted_instance, Environment, FiniteRealizableEnv, LinearRealizableEnv,
    RoundDraw, INSTANCE_STREAM,
};
use crate::oracle::{Oracle, DEFAULT_RIDGE};
use crate::schedule::EpochSchedule;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Planted {
        contexts: usize,
        actions: usize,
        class_size: usize,
        gap: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance_seed: Option<u64>,
    },
    Explicit {
        context_probs: Vec<f64>,
        tables: Vec<Vec<Vec<f64>>>,
        star: usize,
    },
    Linear {
        dim: usize,
        actions: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ridge: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Geometric,
    KnownHorizon,
    Custom { boundaries: Vec<u64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
    /// Keep every k-th round record; totals are always exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_every: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
}

/// Everything needed to reproduce one run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    pub algorithm: Algorithm,
    pub environment: EnvironmentSpec,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub replicate: ReplicateSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub verify: VerifySpec,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl RunConfig {
    pub const DEFAULT_REPLICATIONS: u64 = 20;
    pub const DEFAULT_MC_SAMPLES: u64 = 100_000;

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    /// Rounds to play; a missing horizon is a configuration error.
    pub fn horizon(&self) -> Result<u64> {
        match self.horizon {
            Some(0) => Err(Error::config("horizon", "horizon must be at least 1")),
            Some(t) => Ok(t),
            None => Err(Error::config("horizon", "missing horizon")),
        }
    }

    pub fn log_every(&self) -> u64 {
        self.output.log_every.unwrap_or(1).max(1)
    }

    pub fn replication_seeds(&self) -> Vec<u64> {
        match &self.replicate.seeds {
            Some(seeds) => seeds.clone(),
            None => {
                let n = self.replicate.count.unwrap_or(Self::DEFAULT_REPLICATIONS);
                (0..n).map(|i| self.seed.wrapping_add(i)).collect()
            }
        }
    }

    pub fn mc_samples(&self) -> u64 {
        self.verify.mc_samples.unwrap_or(Self::DEFAULT_MC_SAMPLES)
    }

    pub fn build_schedule(&self) -> Result<EpochSchedule> {
        match &self.schedule {
            ScheduleSpec::Geometric => Ok(EpochSchedule::geometric()),
            ScheduleSpec::KnownHorizon => {
                let t = self.horizon.ok_or_else(|| {
                    Error::config("horizon", "known-horizon schedule needs a horizon")
                })?;
                EpochSchedule::known_horizon(t)
            }
            ScheduleSpec::Custom { boundaries } => EpochSchedule::custom(boundaries.clone()),
        }
    }

    /// Builds the environment instance for a run with `seed`.
    pub fn build_environment(&self, seed: u64) -> Result<EnvInstance> {
        let instance_rng = |explicit: Option<u64>| {
            ChaCha8Rng::seed_from_u64(
                explicit.unwrap_or_else(|| derive_seed(seed, INSTANCE_STREAM)),
            )
        };
        match &self.environment {
            EnvironmentSpec::Planted {
                contexts,
                actions,
                class_size,
                gap,
                instance_seed,
            } => {
                let mut rng = instance_rng(*instance_seed);
                Ok(EnvInstance::Finite(make_planted_instance(
                    *contexts,
                    *actions,
                    *class_size,
                    *gap,
                    &mut rng,
                )?))
            }
            EnvironmentSpec::Explicit {
                context_probs,
                tables,
                star,
            } => {
                let class = Arc::new(FiniteFunctionClass::new(tables)?);
                Ok(EnvInstance::Finite(FiniteRealizableEnv::new(
                    context_probs.clone(),
                    class,
                    *star,
                )?))
            }
            EnvironmentSpec::Linear {
                dim,
                actions,
                ridge,
                instance_seed,
            } => {
                let ridge = ridge.unwrap_or(DEFAULT_RIDGE);
                if !(ridge >= 0.0) {
                    return Err(Error::config(
                        "environment.ridge",
                        "ridge must be non-negative",
                    ));
                }
                let mut rng = instance_rng(*instance_seed);
                Ok(EnvInstance::Linear {
                    env: LinearRealizableEnv::random(*dim, *actions, &mut rng)?,
                    ridge,
                })
            }
        }
    }

    /// Checks everything that can be checked without playing a round.
    pub fn validate(&self) -> Result<()> {
        let horizon = self.horizon()?;
        self.algorithm.validate()?;
        let schedule = self.build_schedule()?;
        if let Some(last) = schedule.last() {
            if last < horizon {
                return Err(Error::config(
                    "schedule.boundaries",
                    format!("schedule ends at round {last} before horizon {horizon}"),
                ));
            }
        }
        if matches!(self.algorithm, Algorithm::FalconPlus { .. })
            && !schedule.at_least_geometric(horizon)?
        {
            return Err(Error::config(
                "schedule",
                "falcon_plus needs tau_m >= 2^m for every epoch",
            ));
        }
        match (&self.algorithm, &self.environment) {
            (Algorithm::Falcon { .. }, EnvironmentSpec::Linear { .. }) => Err(Error::config(
                "algorithm.kind",
                "falcon needs a finite function class; use falcon_plus with a linear environment",
            )),
            _ => Ok(()),
        }
    }
}

/// A built environment together with the oracle that matches its class.
#[derive(Debug, Clone)]
pub enum EnvInstance {
    Finite(FiniteRealizableEnv),
    Linear {
        env: LinearRealizableEnv,
        ridge: f64,
    },
}

impl EnvInstance {
    pub fn oracle(&self) -> Oracle {
        match self {
            EnvInstance::Finite(env) => Oracle::FiniteErm(env.class().clone()),
            EnvInstance::Linear { env, ridge } => Oracle::Linear {
                dim: env.dim(),
                num_actions: env.num_actions(),
                ridge: *ridge,
            },
        }
    }

    pub fn class_size(&self) -> Option<usize> {
        match self {
            EnvInstance::Finite(env) => Some(env.class().len()),
            EnvInstance::Linear { .. } => None,
        }
    }

    pub fn finite(&self) -> Option<&FiniteRealizableEnv> {
        match self {
            EnvInstance::Finite(env) => Some(env),
            EnvInstance::Linear { .. } => None,
        }
    }

    pub fn f_star(&self) -> Option<&TablePredictor> {
        self.finite().map(FiniteRealizableEnv::f_star)
    }
}

impl Environment for EnvInstance {
    fn num_actions(&self) -> usize {
        match self {
            EnvInstance::Finite(env) => env.num_actions(),
            EnvInstance::Linear { env, .. } => env.num_actions(),
        }
    }

    fn sample_round(&self, rng: &mut dyn rand::RngCore) -> RoundDraw {
        match self {
            EnvInstance::Finite(env) => env.sample_round(rng),
            EnvInstance::Linear { env, .. } => env.sample_round(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLANTED: &str = r#"
horizon = 500
seed = 3

[algorithm]
kind = "falcon"
delta = 0.05

[environment]
kind = "planted"
contexts = 4
actions = 3
class_size = 6
gap = 0.2

[schedule]
kind = "geometric"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(PLANTED).unwrap();
        assert_eq!(cfg.horizon, Some(500));
        assert_eq!(cfg.algorithm, Algorithm::Falcon { delta: 0.05 });
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn falcon_plus_config_round_trips() {
        let text = r#"
horizon = 100
seed = 1
[algorithm]
kind = "falcon_plus"
delta = 0.1
[algorithm.xi]
kind = "linear"
dim = 3
c = 0.3333333333333333
[environment]
kind = "linear"
dim = 3
actions = 2
instance_seed = 99
[schedule]
kind = "custom"
boundaries = [2, 4, 8, 16, 32, 64, 128]
[output]
log_every = 10
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(
            RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(),
            cfg
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = PLANTED.replace("gap = 0.2", "gap = 0.2\nbogus = 1");
        assert!(matches!(
            RunConfig::from_toml_str(&text),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn missing_horizon_is_named() {
        let text = PLANTED
            .replace("horizon = 500\n", "")
            .replace("kind = \"geometric\"", "kind = \"known_horizon\"");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "horizon"));
    }

    #[test]
    fn falcon_plus_rejects_known_horizon_schedule() {
        let text = PLANTED
            .replace(
                "kind = \"falcon\"\ndelta = 0.05",
                "kind = \"falcon_plus\"\ndelta = 0.05\n[algorithm.xi]\nkind = \"finite_class\"\nsize = 6\nc = 16.0",
            )
            .replace("kind = \"geometric\"", "kind = \"known_horizon\"");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "schedule"));
    }

    #[test]
    fn short_custom_schedule_is_rejected() {
        let text = PLANTED.replace(
            "kind = \"geometric\"",
            "kind = \"custom\"\nboundaries = [10, 100]",
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(
            matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "schedule.boundaries")
        );
    }

    #[test]
    fn instance_derives_from_seed_unless_pinned() {
        let cfg = RunConfig::from_toml_str(PLANTED).unwrap();
        let a = cfg.build_environment(1).unwrap();
        let b = cfg.build_environment(1).unwrap();
        let c = cfg.build_environment(2).unwrap();
        assert_eq!(a.f_star(), b.f_star());
        assert_ne!(a.f_star(), c.f_star());

        let pinned =
            RunConfig::from_toml_str(&PLANTED.replace("gap = 0.2", "gap = 0.2\ninstance_seed = 5"))
                .unwrap();
        assert_eq!(
            pinned.build_environment(1).unwrap().f_star(),
            pinned.build_environment(2).unwrap().f_star()
        );
    }
}
