//! Learning rates, the inverse-gap action kernel, and the epoch-based learner.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{argmax, ActionIndex, Context, InteractionLog};
use crate::oracle::{EstimationErrorCurve, Model, Oracle};
use crate::schedule::EpochSchedule;
use crate::{Error, Result};

/// Which selection rule drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    /// Full-history ERM with `gamma_m = (1/30) sqrt(K tau / ln(|F| tau / delta))`.
    Falcon { delta: f64 },
    /// Last-epoch oracle with a learning rate driven by `xi`.
    FalconPlus {
        delta: f64,
        xi: EstimationErrorCurve,
    },
    /// Uniform with probability `epsilon`, greedy otherwise.
    EpsilonGreedy { epsilon: f64 },
    /// Uniformly random actions.
    Uniform,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Falcon { .. } => "falcon",
            Algorithm::FalconPlus { .. } => "falcon_plus",
            Algorithm::EpsilonGreedy { .. } => "epsilon_greedy",
            Algorithm::Uniform => "uniform",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            Algorithm::Falcon { delta } | Algorithm::FalconPlus { delta, .. } => Some(delta),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(delta) = self.delta() {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::config("algorithm.delta", "delta must lie in (0, 1)"));
            }
        }
        match self {
            Algorithm::FalconPlus { xi, .. } => xi.validate(),
            Algorithm::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(epsilon) => Err(
                Error::config("algorithm.epsilon", "epsilon must lie in [0, 1]"),
            ),
            _ => Ok(()),
        }
    }
}

/// `(1/30) sqrt(K tau_prev / ln(|F| tau_prev / delta))`, natural log.
pub fn falcon_learning_rate(
    num_actions: usize,
    tau_prev: u64,
    class_size: usize,
    delta: f64,
) -> f64 {
    let tau = tau_prev as f64;
    let log_term = (class_size as f64 * tau / delta).ln();
    (num_actions as f64 * tau / log_term).sqrt() / 30.0
}

/// `(1/2) sqrt(K / xi(tau_prev - tau_prev2, delta / (2 tau_prev)))`, floored
/// at `previous` so the sequence never decreases.
pub fn falcon_plus_learning_rate(
    num_actions: usize,
    xi: &EstimationErrorCurve,
    tau_prev: u64,
    tau_prev2: u64,
    delta: f64,
    previous: f64,
) -> Result<f64> {
    assert!(tau_prev > tau_prev2, "epoch boundaries must increase");
    let err = xi.xi(tau_prev - tau_prev2, delta / (2.0 * tau_prev as f64));
    if !(err > 0.0) {
        return Err(Error::config(
            "algorithm.xi",
            format!("xi returned {err}, must be positive"),
        ));
    }
    Ok((0.5 * (num_actions as f64 / err).sqrt()).max(previous))
}

/// The learning-rate sequence `gamma_1, ..., gamma_{m(T)}` of a run.
///
/// It depends only on the schedule and the algorithm's parameters, never on
/// data. `class_size` is required for FALCON. Baselines report zeros.
pub fn learning_rates(
    algorithm: &Algorithm,
    schedule: &EpochSchedule,
    num_actions: usize,
    class_size: Option<usize>,
    horizon: u64,
) -> Result<Vec<f64>> {
    let taus = schedule.boundaries_through(horizon)?;
    let mut gammas = Vec::with_capacity(taus.len());
    for m in 1..=taus.len() {
        let gamma = match algorithm {
            Algorithm::EpsilonGreedy { .. } | Algorithm::Uniform => 0.0,
            _ if m == 1 => 1.0,
            Algorithm::Falcon { delta } => {
                let size = class_size.ok_or_else(|| {
                    Error::config("algorithm.kind", "falcon needs a finite class")
                })?;
                falcon_learning_rate(num_actions, taus[m - 2], size, *delta).max(gammas[m - 2])
            }
            Algorithm::FalconPlus { delta, xi } => {
                let prev2 = if m >= 3 { taus[m - 3] } else { 0 };
                falcon_plus_learning_rate(
                    num_actions,
                    xi,
                    taus[m - 2],
                    prev2,
                    *delta,
                    gammas[m - 2],
                )?
            }
        };
        gammas.push(gamma);
    }
    Ok(gammas)
}

/// A probability vector over actions plus the greedy action it was built
/// around.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
    greedy: ActionIndex,
}

impl ActionDistribution {
    /// Inverse-gap weighting: every non-greedy action gets
    /// `1 / (K + gamma (f(greedy) - f(a)))`, the greedy action the rest.
    pub fn inverse_gap(predictions: &[f64], gamma: f64) -> Self {
        let k = predictions.len();
        let greedy = argmax(predictions);
        let top = predictions[greedy];
        let mut probs = vec![0.0; k];
        let mut rest = 0.0;
        for (a, &f) in predictions.iter().enumerate() {
            if a != greedy {
                probs[a] = 1.0 / (k as f64 + gamma * (top - f));
                rest += probs[a];
            }
        }
        probs[greedy] = 1.0 - rest;
        Self { probs, greedy }
    }

    /// `epsilon / K` everywhere plus `1 - epsilon` on the greedy action.
    pub fn epsilon_greedy(predictions: &[f64], epsilon: f64) -> Self {
        let k = predictions.len();
        let greedy = argmax(predictions);
        let mut probs = vec![epsilon / k as f64; k];
        probs[greedy] += 1.0 - epsilon;
        Self { probs, greedy }
    }

    pub fn uniform(num_actions: usize) -> Self {
        Self {
            probs: vec![1.0 / num_actions as f64; num_actions],
            greedy: 0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: ActionIndex) -> f64 {
        self.probs[a]
    }

    pub fn greedy(&self) -> ActionIndex {
        self.greedy
    }

    /// Inverse CDF over action-index order for a uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> ActionIndex {
        let mut acc = 0.0;
        for (a, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        // u landed in the rounding slack above the final partial sum
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Per-epoch learner state: the frozen `(gamma_m, f_m)` pair plus the
/// bookkeeping needed to compute the next one.
#[derive(Debug, Clone)]
pub struct Learner {
    algorithm: Algorithm,
    oracle: Oracle,
    schedule: EpochSchedule,
    num_actions: usize,
    epoch: usize,
    gamma: f64,
    model: Model,
    gammas: Vec<f64>,
    oracle_calls: u64,
}

impl Learner {
    /// Enters epoch 1 with `gamma_1 = 1` and the oracle's empty-data model.
    /// That fit does not count as an oracle call.
    pub fn new(
        algorithm: Algorithm,
        oracle: Oracle,
        schedule: EpochSchedule,
        num_actions: usize,
    ) -> Result<Self> {
        algorithm.validate()?;
        if num_actions < 2 {
            return Err(Error::config(
                "environment.actions",
                "need at least two actions",
            ));
        }
        if matches!(algorithm, Algorithm::Falcon { .. }) && !matches!(oracle, Oracle::FiniteErm(_))
        {
            return Err(Error::config(
                "algorithm.kind",
                "falcon needs a finite function class",
            ));
        }
        let model = oracle.fit(&[])?;
        Ok(Self {
            algorithm,
            oracle,
            schedule,
            num_actions,
            epoch: 1,
            gamma: 1.0,
            model,
            gammas: vec![1.0],
            oracle_calls: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    pub fn schedule(&self) -> &EpochSchedule {
        &self.schedule
    }

    /// Last round of the current epoch, if the schedule defines one.
    pub fn epoch_end(&self) -> Option<u64> {
        self.schedule.boundary(self.epoch)
    }

    /// Rounds whose data the oracle sees when entering epoch `m`:
    /// `1..=tau_{m-1}` for full-history rules, `tau_{m-2}+1..=tau_{m-1}` for
    /// FALCON+.
    pub fn oracle_window(&self, m: usize) -> Result<(u64, u64)> {
        assert!(m >= 2);
        let exhausted = || Error::ScheduleExhausted {
            round: self.schedule.last().unwrap_or(0) + 1,
            last: self.schedule.last().unwrap_or(0),
        };
        let tau_prev = self.schedule.boundary(m - 1).ok_or_else(exhausted)?;
        let first = match self.algorithm {
            Algorithm::FalconPlus { .. } => self.schedule.boundary(m - 2).unwrap() + 1,
            _ => 1,
        };
        Ok((first, tau_prev))
    }

    /// Moves to the next epoch once round `tau_{m}` has been logged: refits
    /// the model on the oracle window and recomputes the learning rate.
    pub fn advance_epoch(&mut self, log: &InteractionLog) -> Result<()> {
        let next = self.epoch + 1;
        let (first, last) = self.oracle_window(next)?;
        if self.schedule.boundary(next).is_none() {
            return Err(Error::ScheduleExhausted {
                round: last + 1,
                last,
            });
        }
        debug_assert!(log.len() as u64 >= last);
        self.model = self.oracle.fit(log.rounds(first, last))?;
        self.oracle_calls += 1;
        self.gamma = match self.algorithm {
            Algorithm::Falcon { delta } => {
                let class_size = match &self.oracle {
                    Oracle::FiniteErm(class) => class.len(),
                    Oracle::Linear { .. } => unreachable!("checked in Learner::new"),
                };
                falcon_learning_rate(self.num_actions, last, class_size, delta).max(self.gamma)
            }
            Algorithm::FalconPlus { delta, ref xi } => {
                let tau_prev2 = self.schedule.boundary(next - 2).unwrap();
                falcon_plus_learning_rate(self.num_actions, xi, last, tau_prev2, delta, self.gamma)?
            }
            Algorithm::EpsilonGreedy { .. } | Algorithm::Uniform => 0.0,
        };
        self.gammas.push(self.gamma);
        self.epoch = next;
        Ok(())
    }

    /// Action distribution at `x` under the current epoch's rule, plus the
    /// number of predictions that had to be clamped into `[0, 1]`.
    pub fn distribution(&self, x: &Context, scratch: &mut Vec<f64>) -> (ActionDistribution, u64) {
        let clamps = self.model.predict_all(x, scratch);
        let dist = match self.algorithm {
            Algorithm::Falcon { .. } | Algorithm::FalconPlus { .. } => {
                ActionDistribution::inverse_gap(scratch, self.gamma)
            }
            Algorithm::EpsilonGreedy { epsilon } => {
                ActionDistribution::epsilon_greedy(scratch, epsilon)
            }
            Algorithm::Uniform => ActionDistribution::uniform(self.num_actions),
        };
        (dist, clamps)
    }

    /// Draws one action with a single uniform draw from `rng`.
    pub fn step<R: Rng + ?Sized>(
        &self,
        x: &Context,
        rng: &mut R,
        scratch: &mut Vec<f64>,
    ) -> (ActionIndex, ActionDistribution, u64) {
        let (dist, clamps) = self.distribution(x, scratch);
        let u: f64 = rng.random();
        (dist.sample(u), dist, clamps)
    }
}
