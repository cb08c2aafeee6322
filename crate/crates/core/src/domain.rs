//! Domain types shared by the learners, environments and verification suite.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of an action in `[0, K)`.
pub type ActionIndex = usize;

/// A context as seen by the learner.
///
/// Finite environments hand out an index into their context space. Linear
/// environments hand out one feature vector per action, stored row-major as
/// `K x d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Context {
    Index(usize),
    Features(Features),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    dim: usize,
    data: Arc<[f64]>,
}

impl Features {
    /// Builds per-action features from a row-major `K x dim` buffer.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::config("dim", "feature buffer is not a K x d matrix"));
        }
        for row in data.chunks(dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= 1.0 + 1e-12) {
                return Err(Error::config(
                    "features",
                    format!("row norm {norm} exceeds 1"),
                ));
            }
        }
        Ok(Self {
            dim,
            data: data.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_actions(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn action(&self, a: ActionIndex) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }
}

impl Context {
    pub fn index(&self) -> Option<usize> {
        match self {
            Context::Index(i) => Some(*i),
            Context::Features(_) => None,
        }
    }
}

/// A reward model `f: (context, action) -> [0, 1]`.
pub trait Predictor {
    fn num_actions(&self) -> usize;

    fn eval(&self, x: &Context, a: ActionIndex) -> f64;

    /// Predictions for every action, written into `out`.
    fn eval_all(&self, x: &Context, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.num_actions()).map(|a| self.eval(x, a)));
    }
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> ActionIndex {
    let mut best = 0;
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = a;
        }
    }
    best
}

/// Dense `|X| x K` reward table. Members of a [`FiniteFunctionClass`] carry
/// their position in the class as `id`.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePredictor {
    id: Option<usize>,
    num_contexts: usize,
    num_actions: usize,
    values: Arc<[f64]>,
}

impl TablePredictor {
    /// `rows[x][a]` is the predicted reward of action `a` in context `x`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_contexts = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_contexts == 0 {
            return Err(Error::config("contexts", "table has no contexts"));
        }
        if num_actions < 2 {
            return Err(Error::config("actions", "need at least two actions"));
        }
        let mut values = Vec::with_capacity(num_contexts * num_actions);
        for row in rows {
            if row.len() != num_actions {
                return Err(Error::config("table", "ragged reward table"));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::config("table", format!("value {v} outside [0, 1]")));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            id: None,
            num_contexts,
            num_actions,
            values: values.into(),
        })
    }

    pub fn id(&self) -> Option<usize> {
        self.id
    }

    pub fn num_contexts(&self) -> usize {
        self.num_contexts
    }

    pub fn get(&self, x: usize, a: ActionIndex) -> f64 {
        self.values[x * self.num_actions + a]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.num_actions..(x + 1) * self.num_actions]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.num_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

impl Predictor for TablePredictor {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn eval(&self, x: &Context, a: ActionIndex) -> f64 {
        match x {
            Context::Index(i) => self.get(*i, a),
            Context::Features(_) => panic!("table predictor queried with a feature context"),
        }
    }

    fn eval_all(&self, x: &Context, out: &mut Vec<f64>) {
        out.clear();
        match x {
            Context::Index(i) => out.extend_from_slice(self.row(*i)),
            Context::Features(_) => panic!("table predictor queried with a feature context"),
        }
    }
}

/// An ordered, finite class of table predictors over a shared context space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFunctionClass {
    members: Vec<TablePredictor>,
}

impl FiniteFunctionClass {
    pub const MIN_SIZE: usize = 4;

    /// Each entry of `tables` is one member given as `|X|` rows of `K` values.
    pub fn new(tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        if tables.len() < Self::MIN_SIZE {
            return Err(Error::config(
                "class_size",
                format!(
                    "class needs at least {} members, got {}",
                    Self::MIN_SIZE,
                    tables.len()
                ),
            ));
        }
        let mut members = Vec::with_capacity(tables.len());
        for (id, rows) in tables.iter().enumerate() {
            let mut member = TablePredictor::from_rows(rows)?;
            member.id = Some(id);
            members.push(member);
        }
        let (nx, k) = (members[0].num_contexts, members[0].num_actions);
        if members
            .iter()
            .any(|m| m.num_contexts != nx || m.num_actions != k)
        {
            return Err(Error::config("class", "members disagree on |X| x K"));
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, id: usize) -> &TablePredictor {
        &self.members[id]
    }

    pub fn members(&self) -> &[TablePredictor] {
        &self.members
    }

    pub fn num_contexts(&self) -> usize {
        self.members[0].num_contexts
    }

    pub fn num_actions(&self) -> usize {
        self.members[0].num_actions
    }
}

/// A deterministic policy over a finite context space, stored densely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<ActionIndex>,
}

impl Policy {
    pub fn new(actions: Vec<ActionIndex>) -> Self {
        Self { actions }
    }

    pub fn action(&self, x: usize) -> ActionIndex {
        self.actions[x]
    }

    pub fn actions(&self) -> &[ActionIndex] {
        &self.actions
    }
}

/// The greedy policy of `f`: `pi(x) = argmax_a f(x, a)` with lowest-index
/// tie-breaking.
pub fn induced_policy<P: Predictor + ?Sized>(f: &P, num_contexts: usize) -> Policy {
    let mut buf = Vec::with_capacity(f.num_actions());
    let actions = (0..num_contexts)
        .map(|x| {
            f.eval_all(&Context::Index(x), &mut buf);
            argmax(&buf)
        })
        .collect();
    Policy { actions }
}

/// Checks that `probs` is a probability vector summing to one within
/// [`crate::EXACT_TOL`].
pub fn validate_distribution(field: &str, probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::config(field, "empty distribution"));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::config(field, format!("negative or NaN entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > crate::EXACT_TOL {
        return Err(Error::config(field, format!("sums to {total}, not 1")));
    }
    Ok(())
}

/// Exact expected reward `sum_x D(x) f*(x, pi(x))` of a policy.
pub fn policy_reward(
    policy: &Policy,
    f_star: &TablePredictor,
    context_probs: &[f64],
) -> Result<f64> {
    validate_distribution("context_probs", context_probs)?;
    if context_probs.len() != policy.actions.len() || context_probs.len() != f_star.num_contexts {
        return Err(Error::config("context_probs", "length does not match |X|"));
    }
    Ok(context_probs
        .iter()
        .zip(&policy.actions)
        .enumerate()
        .map(|(x, (p, &a))| p * f_star.get(x, a))
        .sum())
}

/// One observed interaction: the learner only ever sees the chosen action's
/// reward.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub round: u64,
    pub context: Context,
    pub action: ActionIndex,
    pub reward: f64,
}

/// Ordered interaction history, rounds numbered from 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    records: Vec<LogRecord>,
    epoch_ends: Vec<u64>,
}

impl InteractionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the next round and returns its round number.
    pub fn push(&mut self, context: Context, action: ActionIndex, reward: f64) -> u64 {
        assert!(
            (0.0..=1.0).contains(&reward),
            "reward {reward} outside [0, 1]"
        );
        let round = self.records.len() as u64 + 1;
        self.records.push(LogRecord {
            round,
            context,
            action,
            reward,
        });
        round
    }

    pub fn close_epoch(&mut self) {
        self.epoch_ends.push(self.records.len() as u64);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn epoch_ends(&self) -> &[u64] {
        &self.epoch_ends
    }

    /// Records for rounds `first..=last` (1-based, inclusive).
    pub fn rounds(&self, first: u64, last: u64) -> &[LogRecord] {
        if last < first {
            return &[];
        }
        &self.records[(first - 1) as usize..last as usize]
    }
}
