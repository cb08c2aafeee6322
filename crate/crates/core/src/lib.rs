//! Contextual bandits reduced to offline least-squares regression.
//!
//! The crate implements two epoch-based learners that call a regression
//! oracle once per epoch and pick actions with an inverse-gap-weighted
//! kernel:
//!
//! - **FALCON** feeds the full history into an exact least-squares ERM over a
//!   finite function class.
//! - **FALCON+** feeds only the previous epoch's data into an arbitrary oracle
//!   whose estimation error is described by an [`EstimationErrorCurve`].
//!
//! Around the learners sit synthetic realizable environments ([`env`]), a
//! deterministic simulation runner ([`sim`]), and a brute-force verification
//! suite ([`verify`]) that checks the policy-space view of the kernel on
//! small, enumerable instances.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod algo;
pub mod cli;
pub mod config;
pub mod domain;
pub mod env;
mod error;
pub mod oracle;
pub mod plot;
pub mod schedule;
pub mod sim;
pub mod verify;

pub use algo::{ActionDistribution, Algorithm};
pub use domain::{
    induced_policy, policy_reward, ActionIndex, Context, FiniteFunctionClass, InteractionLog,
    Policy, Predictor, TablePredictor,
};
pub use env::{Environment, FiniteRealizableEnv, LinearRealizableEnv};
pub use error::{Error, Result};
pub use oracle::{EstimationErrorCurve, LinearPredictor, Model, Oracle};
pub use schedule::EpochSchedule;
pub use sim::{regret_bound, replicate, run, RunConfig, RunResult};

/// Absolute tolerance used for "exact" floating-point comparisons.
pub const EXACT_TOL: f64 = 1e-12;
