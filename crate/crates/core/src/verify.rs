//! Brute-force checks of the policy-space view of the action kernel.
//!
//! On a finite context space every kernel `p(a | x)` induces a product
//! measure `Q(pi) = prod_x p(pi(x) | x)` over all `K^|X|` deterministic
//! policies. On instances small enough to enumerate (`|X| log2 K <= 20`) this
//! module materializes `Q` and checks, exactly:
//!
//! - marginalization: `sum_pi 1{pi(x) = a} Q(pi) = p(a | x)`;
//! - exploitation: `sum_pi Q(pi) IReg(pi) <= K / gamma`;
//! - exploration: `E_x[1 / p(pi(x) | x)] <= K + gamma IReg(pi)` for every `pi`;
//! - equivalence: expected instantaneous regret equals `sum_pi Q(pi) Reg(pi)`
//!   (against a Monte-Carlo estimate);
//! - the two-sided regret-estimate inequalities with constant 5.15, which
//!   only hold with high probability and are therefore reported, not
//!   enforced.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algo::ActionDistribution;
use crate::config::RunConfig;
use crate::domain::{induced_policy, validate_distribution, ActionIndex, Policy, TablePredictor};
use crate::env::{derive_seed, Environment, FiniteRealizableEnv};
use crate::oracle::Model;
use crate::{Error, Result, EXACT_TOL};

/// Largest enumerable policy space, in bits (`|X| log2 K`).
pub const MAX_POLICY_BITS: f64 = 20.0;
/// Tolerance for the IOP constraints.
pub const IOP_TOL: f64 = 1e-9;
/// Constant in the regret-estimate inequalities.
pub const REGRET_ESTIMATE_C0: f64 = 5.15;

const VERIFY_STREAM: u64 = 3;

/// `p(a | x)` for every context of a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("kernel", "no contexts"));
        }
        let k = rows[0].len();
        for row in &rows {
            if row.len() != k {
                return Err(Error::config("kernel", "ragged kernel"));
            }
            validate_distribution("kernel", row)?;
        }
        Ok(Self { rows })
    }

    /// The inverse-gap kernel of `(f_hat, gamma)` on every context.
    pub fn inverse_gap(f_hat: &TablePredictor, gamma: f64) -> Self {
        let rows = (0..f_hat.num_contexts())
            .map(|x| {
                ActionDistribution::inverse_gap(f_hat.row(x), gamma)
                    .probs()
                    .to_vec()
            })
            .collect();
        Self { rows }
    }

    pub fn prob(&self, x: usize, a: ActionIndex) -> f64 {
        self.rows[x][a]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn num_contexts(&self) -> usize {
        self.rows.len()
    }

    pub fn num_actions(&self) -> usize {
        self.rows[0].len()
    }
}

pub fn is_enumerable(num_contexts: usize, num_actions: usize) -> bool {
    num_contexts as f64 * (num_actions as f64).log2() <= MAX_POLICY_BITS + 1e-9
}

/// Probability of every policy in `A^X`. Policy `i` maps context `x` to
/// digit `x` of `i` written in base `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMeasure {
    num_contexts: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl PolicyMeasure {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn action(&self, policy: usize, x: usize) -> ActionIndex {
        (policy / self.num_actions.pow(x as u32)) % self.num_actions
    }

    pub fn policy(&self, index: usize) -> Policy {
        Policy::new(
            (0..self.num_contexts)
                .map(|x| self.action(index, x))
                .collect(),
        )
    }

    /// Index of a policy in the enumeration order.
    pub fn index_of(&self, policy: &Policy) -> usize {
        policy
            .actions()
            .iter()
            .rev()
            .fold(0, |acc, &a| acc * self.num_actions + a)
    }

    /// `sum_pi 1{pi(x) = a} Q(pi)`.
    pub fn marginal(&self, x: usize, a: ActionIndex) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.action(*i, x) == a)
            .map(|(_, q)| q)
            .sum()
    }
}

/// `Q(pi) = prod_x p(pi(x) | x)` over all enumerated policies.
pub fn product_measure(kernel: &Kernel) -> Result<PolicyMeasure> {
    let (nx, k) = (kernel.num_contexts(), kernel.num_actions());
    if !is_enumerable(nx, k) {
        return Err(Error::PolicySpaceTooLarge {
            contexts: nx,
            actions: k,
        });
    }
    // Build by appending one context at a time: index = prev + K^x * a.
    let mut probs = vec![1.0];
    for x in 0..nx {
        let mut next = Vec::with_capacity(probs.len() * k);
        for a in 0..k {
            let p = kernel.prob(x, a);
            next.extend(probs.iter().map(|q| q * p));
        }
        probs = next;
    }
    Ok(PolicyMeasure {
        num_contexts: nx,
        num_actions: k,
        probs,
    })
}

/// `Reg(pi)` and `IReg(pi)` for every enumerated policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyQuantities {
    pub reg: Vec<f64>,
    pub ireg: Vec<f64>,
}

fn policy_values(q: &PolicyMeasure, f: &TablePredictor, context_probs: &[f64]) -> Vec<f64> {
    // same digit-append construction as the measure
    let mut values = vec![0.0];
    for (x, &d) in context_probs.iter().enumerate() {
        let mut next = Vec::with_capacity(values.len() * q.num_actions);
        for a in 0..q.num_actions {
            let v = d * f.get(x, a);
            next.extend(values.iter().map(|r| r + v));
        }
        values = next;
    }
    values
}

/// Exact implicit regret against `f*` and predicted implicit regret against
/// `f_hat` for every policy, under the context distribution.
pub fn implicit_quantities(
    q: &PolicyMeasure,
    f_hat: &TablePredictor,
    f_star: &TablePredictor,
    context_probs: &[f64],
) -> Result<PolicyQuantities> {
    validate_distribution("context_probs", context_probs)?;
    if context_probs.len() != q.num_contexts
        || f_hat.num_contexts() != q.num_contexts
        || f_star.num_contexts() != q.num_contexts
    {
        return Err(Error::config(
            "context_probs",
            "dimension mismatch with the policy space",
        ));
    }
    let true_values = policy_values(q, f_star, context_probs);
    let predicted = policy_values(q, f_hat, context_probs);
    let best_true = true_values[q.index_of(&induced_policy(f_star, q.num_contexts))];
    let best_pred = predicted[q.index_of(&induced_policy(f_hat, q.num_contexts))];
    Ok(PolicyQuantities {
        reg: true_values.iter().map(|v| best_true - v).collect(),
        ireg: predicted.iter().map(|v| best_pred - v).collect(),
    })
}

/// Largest `|marginal(x, a) - p(a | x)|`.
pub fn marginal_error(q: &PolicyMeasure, kernel: &Kernel) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..kernel.num_contexts() {
        for a in 0..kernel.num_actions() {
            worst = worst.max((q.marginal(x, a) - kernel.prob(x, a)).abs());
        }
    }
    worst
}

/// `E_x[1 / p(pi(x) | x)]`.
pub fn inverse_probability(
    q: &PolicyMeasure,
    kernel: &Kernel,
    context_probs: &[f64],
    policy: usize,
) -> f64 {
    context_probs
        .iter()
        .enumerate()
        .map(|(x, d)| d / kernel.prob(x, q.action(policy, x)))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IopReport {
    pub exploitation_lhs: f64,
    pub exploitation_rhs: f64,
    /// Smallest `rhs - lhs` of the exploration constraint over all policies.
    pub exploration_min_slack: f64,
    pub exploration_violations: usize,
    pub policies: usize,
}

impl IopReport {
    pub fn exploitation_ok(&self) -> bool {
        self.exploitation_lhs <= self.exploitation_rhs + IOP_TOL
    }

    pub fn exploration_ok(&self) -> bool {
        self.exploration_violations == 0
    }

    pub fn passed(&self) -> bool {
        self.exploitation_ok() && self.exploration_ok()
    }
}

/// Checks both implicit-optimization constraints for `Q`.
pub fn check_iop(
    q: &PolicyMeasure,
    gamma: f64,
    kernel: &Kernel,
    quantities: &PolicyQuantities,
    context_probs: &[f64],
) -> IopReport {
    let k = kernel.num_actions() as f64;
    let exploitation_lhs = q
        .probs
        .iter()
        .zip(&quantities.ireg)
        .map(|(p, r)| p * r)
        .sum();
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    for (i, ireg) in quantities.ireg.iter().enumerate() {
        let lhs = inverse_probability(q, kernel, context_probs, i);
        let slack = k + gamma * ireg - lhs;
        min_slack = min_slack.min(slack);
        if slack < -IOP_TOL {
            violations += 1;
        }
    }
    IopReport {
        exploitation_lhs,
        exploitation_rhs: k / gamma,
        exploration_min_slack: min_slack,
        exploration_violations: violations,
        policies: q.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquiReport {
    pub exact: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub samples: u64,
}

impl EquiReport {
    /// Agreement within four Monte-Carlo standard errors.
    pub fn passed(&self) -> bool {
        (self.exact - self.mc_mean).abs() <= 4.0 * self.mc_se + EXACT_TOL
    }
}

/// Compares `sum_pi Q(pi) Reg(pi)` with a Monte-Carlo estimate of the
/// instantaneous regret `r(pi_{f*}(x)) - r(a)` for `x ~ D`, `a ~ p(. | x)`.
pub fn check_equi<R: Rng>(
    q: &PolicyMeasure,
    env: &FiniteRealizableEnv,
    kernel: &Kernel,
    quantities: &PolicyQuantities,
    samples: u64,
    rng: &mut R,
) -> EquiReport {
    let exact = q
        .probs
        .iter()
        .zip(&quantities.reg)
        .map(|(p, r)| p * r)
        .sum();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let draw = env.sample_round(rng);
        let x = draw.context.index().expect("finite environment");
        let mut acc = 0.0;
        let mut action = kernel.num_actions() - 1;
        let u: f64 = rng.random();
        for (a, p) in kernel.row(x).iter().enumerate() {
            acc += p;
            if u < acc {
                action = a;
                break;
            }
        }
        let v = draw.rewards[draw.optimal] - draw.rewards[action];
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    EquiReport {
        exact,
        mc_mean: mean,
        mc_se: (var / n).sqrt(),
        samples,
    }
}

/// Policies violating either `Reg <= 2 IReg + c0 K / gamma` or
/// `IReg <= 2 Reg + c0 K / gamma`.
pub fn regret_estimate_violations(
    quantities: &PolicyQuantities,
    num_actions: usize,
    gamma: f64,
) -> usize {
    let slack = REGRET_ESTIMATE_C0 * num_actions as f64 / gamma;
    quantities
        .reg
        .iter()
        .zip(&quantities.ireg)
        .filter(|(reg, ireg)| {
            **reg > 2.0 * **ireg + slack + IOP_TOL || **ireg > 2.0 * **reg + slack + IOP_TOL
        })
        .count()
}

/// Whether a failed check fails the suite or is informational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Required,
    Reported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub epoch: usize,
    pub passed: bool,
    pub severity: Severity,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.passed, self.severity) {
            (true, _) => "PASS",
            (false, Severity::Required) => "FAIL",
            (false, Severity::Reported) => "NOTE",
        };
        write!(
            f,
            "{status} {} epoch={} {}",
            self.name, self.epoch, self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.lines
            .iter()
            .all(|l| l.passed || l.severity == Severity::Reported)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines
            .iter()
            .filter(|l| !l.passed && l.severity == Severity::Required)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} checks, {} failed: {}",
            self.lines.len(),
            failed,
            if failed == 0 { "OK" } else { "FAILED" }
        )
    }
}

/// All checks for one epoch's `(f_hat, gamma)` pair.
pub fn verify_epoch<R: Rng>(
    env: &FiniteRealizableEnv,
    f_hat: &TablePredictor,
    gamma: f64,
    epoch: usize,
    mc_samples: u64,
    rng: &mut R,
) -> Result<Vec<CheckLine>> {
    let kernel = Kernel::inverse_gap(f_hat, gamma);
    let q = product_measure(&kernel)?;
    let quantities = implicit_quantities(&q, f_hat, env.f_star(), env.context_probs())?;
    let mut lines = Vec::new();

    let err = marginal_error(&q, &kernel);
    lines.push(CheckLine {
        name: "marginalization",
        epoch,
        passed: err <= EXACT_TOL,
        severity: Severity::Required,
        detail: format!("max_abs_err={err:.3e}"),
    });

    let iop = check_iop(&q, gamma, &kernel, &quantities, env.context_probs());
    lines.push(CheckLine {
        name: "exploitation",
        epoch,
        passed: iop.exploitation_ok(),
        severity: Severity::Required,
        detail: format!(
            "lhs={:.6} rhs={:.6}",
            iop.exploitation_lhs, iop.exploitation_rhs
        ),
    });
    lines.push(CheckLine {
        name: "exploration",
        epoch,
        passed: iop.exploration_ok(),
        severity: Severity::Required,
        detail: format!(
            "policies={} violations={} min_slack={:.3e}",
            iop.policies, iop.exploration_violations, iop.exploration_min_slack
        ),
    });

    if mc_samples > 0 {
        let equi = check_equi(&q, env, &kernel, &quantities, mc_samples, rng);
        lines.push(CheckLine {
            name: "equivalence",
            epoch,
            passed: equi.passed(),
            severity: Severity::Required,
            detail: format!(
                "exact={:.6} mc={:.6} se={:.6} n={}",
                equi.exact, equi.mc_mean, equi.mc_se, equi.samples
            ),
        });
    }

    let violations = regret_estimate_violations(&quantities, kernel.num_actions(), gamma);
    lines.push(CheckLine {
        name: "regret-estimates",
        epoch,
        passed: violations == 0,
        severity: Severity::Reported,
        detail: format!("policies={} violations={}", q.len(), violations),
    });
    Ok(lines)
}

/// Runs the configured learner and verifies every epoch's kernel.
pub fn verify_config(config: &RunConfig) -> Result<VerifyReport> {
    let result = crate::sim::run(config)?;
    let env = config.build_environment(config.seed)?;
    let env = env.finite().ok_or_else(|| {
        Error::config(
            "environment.kind",
            "verification needs a finite environment",
        )
    })?;
    if !is_enumerable(env.num_contexts(), env.num_actions()) {
        return Err(Error::PolicySpaceTooLarge {
            contexts: env.num_contexts(),
            actions: env.num_actions(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, VERIFY_STREAM));
    let mut report = VerifyReport::default();
    for epoch in &result.epochs {
        let Model::Member(f_hat) = &epoch.model else {
            unreachable!("finite environments produce member models")
        };
        if epoch.gamma <= 0.0 {
            return Err(Error::config(
                "algorithm.kind",
                "verification needs an inverse-gap learner",
            ));
        }
        report.lines.extend(verify_epoch(
            env,
            f_hat,
            epoch.gamma,
            epoch.epoch,
            config.mc_samples(),
            &mut rng,
        )?);
    }
    Ok(report)
}
