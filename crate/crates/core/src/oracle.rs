//! Offline regression oracles and their estimation-error curves.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionIndex, Context, FiniteFunctionClass, LogRecord, Predictor, TablePredictor,
};
use crate::{Error, Result, EXACT_TOL};

/// Default ridge added to the normal equations so they stay invertible.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Squared loss of a table predictor on a batch of logged samples.
pub fn squared_loss(f: &TablePredictor, data: &[LogRecord]) -> f64 {
    data.iter()
        .map(|s| {
            let e = f.eval(&s.context, s.action) - s.reward;
            e * e
        })
        .sum()
}

/// Exact least-squares ERM over a finite class.
///
/// Losses within [`EXACT_TOL`] of each other count as ties and go to the
/// smaller member index, so empty data returns member 0.
pub fn erm_least_squares<'a>(
    class: &'a FiniteFunctionClass,
    data: &[LogRecord],
) -> &'a TablePredictor {
    let mut best = 0;
    let mut best_loss = squared_loss(class.member(0), data);
    for (id, member) in class.members().iter().enumerate().skip(1) {
        let loss = squared_loss(member, data);
        if loss < best_loss - EXACT_TOL {
            best = id;
            best_loss = loss;
        }
    }
    class.member(best)
}

/// Linear reward model `theta . phi(x, a)`, clamped to `[0, 1]` on output.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    theta: Vec<f64>,
    num_actions: usize,
}

impl LinearPredictor {
    pub fn new(theta: Vec<f64>, num_actions: usize) -> Self {
        Self { theta, num_actions }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn raw(&self, phi: &[f64]) -> f64 {
        self.theta.iter().zip(phi).map(|(t, p)| t * p).sum()
    }

    /// Clamped prediction plus whether clamping changed the value.
    pub fn eval_flagged(&self, x: &Context, a: ActionIndex) -> (f64, bool) {
        let Context::Features(features) = x else {
            panic!("linear predictor queried with an index context");
        };
        let raw = self.raw(features.action(a));
        let clamped = raw.clamp(0.0, 1.0);
        (clamped, clamped != raw)
    }
}

impl Predictor for LinearPredictor {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn eval(&self, x: &Context, a: ActionIndex) -> f64 {
        self.eval_flagged(x, a).0
    }
}

/// Ridge least squares: solves `(sum phi phi^T + ridge I) theta = sum phi r`.
pub fn linear_least_squares(dim: usize, ridge: f64, data: &[(&[f64], f64)]) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::config("dim", "dimension must be positive"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::config("ridge", "ridge must be non-negative"));
    }
    let mut gram = DMatrix::<f64>::identity(dim, dim) * ridge;
    let mut rhs = DVector::<f64>::zeros(dim);
    for &(phi, r) in data {
        debug_assert_eq!(phi.len(), dim);
        for i in 0..dim {
            rhs[i] += phi[i] * r;
            for j in 0..dim {
                gram[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    if data.is_empty() {
        return Ok(vec![0.0; dim]);
    }
    let theta = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram.lu().solve(&rhs).ok_or_else(|| {
            Error::config("ridge", "normal equations are singular; raise the ridge")
        })?,
    };
    Ok(theta.iter().copied().collect())
}

/// A fitted model returned by an [`Oracle`].
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Member(TablePredictor),
    Linear(LinearPredictor),
}

impl Model {
    /// Class position for finite-class members.
    pub fn member_id(&self) -> Option<usize> {
        match self {
            Model::Member(t) => t.id(),
            Model::Linear(_) => None,
        }
    }

    /// Fills `out` with clamped predictions and returns how many were clamped.
    pub fn predict_all(&self, x: &Context, out: &mut Vec<f64>) -> u64 {
        match self {
            Model::Member(t) => {
                t.eval_all(x, out);
                0
            }
            Model::Linear(l) => {
                out.clear();
                let mut clamps = 0;
                for a in 0..l.num_actions {
                    let (v, c) = l.eval_flagged(x, a);
                    clamps += c as u64;
                    out.push(v);
                }
                clamps
            }
        }
    }
}

impl Predictor for Model {
    fn num_actions(&self) -> usize {
        match self {
            Model::Member(t) => t.num_actions(),
            Model::Linear(l) => l.num_actions(),
        }
    }

    fn eval(&self, x: &Context, a: ActionIndex) -> f64 {
        match self {
            Model::Member(t) => t.eval(x, a),
            Model::Linear(l) => l.eval(x, a),
        }
    }

    fn eval_all(&self, x: &Context, out: &mut Vec<f64>) {
        self.predict_all(x, out);
    }
}

/// An offline least-squares oracle. Pure in its input batch.
#[derive(Debug, Clone)]
pub enum Oracle {
    FiniteErm(Arc<FiniteFunctionClass>),
    Linear {
        dim: usize,
        num_actions: usize,
        ridge: f64,
    },
}

impl Oracle {
    pub fn fit(&self, data: &[LogRecord]) -> Result<Model> {
        match self {
            Oracle::FiniteErm(class) => Ok(Model::Member(erm_least_squares(class, data).clone())),
            Oracle::Linear {
                dim,
                num_actions,
                ridge,
            } => {
                let mut rows = Vec::with_capacity(data.len());
                for s in data {
                    let Context::Features(f) = &s.context else {
                        return Err(Error::config(
                            "environment",
                            "linear oracle needs feature contexts",
                        ));
                    };
                    rows.push((f.action(s.action), s.reward));
                }
                let theta = linear_least_squares(*dim, *ridge, &rows)?;
                Ok(Model::Linear(LinearPredictor::new(theta, *num_actions)))
            }
        }
    }
}

/// High-probability squared-error guarantee `xi(n, delta)` of an oracle after
/// `n` i.i.d. samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimationErrorCurve {
    /// `c ln(2|F| / delta) / n`
    FiniteClass { size: usize, c: f64 },
    /// `c (d ln(e max(n, d) / d) + ln(2 / delta)) / n`
    Linear { dim: usize, c: f64 },
    /// `xi` that ignores its arguments.
    Constant { value: f64 },
}

impl EstimationErrorCurve {
    pub const DEFAULT_FINITE_C: f64 = 16.0;
    pub const DEFAULT_LINEAR_C: f64 = 8.0;

    pub fn finite_class(size: usize, c: f64) -> Result<Self> {
        if size < FiniteFunctionClass::MIN_SIZE {
            return Err(Error::config("xi.size", "finite class needs |F| >= 4"));
        }
        let curve = Self::FiniteClass { size, c };
        curve.validate()?;
        Ok(curve)
    }

    pub fn linear(dim: usize, c: f64) -> Result<Self> {
        let curve = Self::Linear { dim, c };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::FiniteClass { size, c } => {
                if size < FiniteFunctionClass::MIN_SIZE {
                    return Err(Error::config("xi.size", "finite class needs |F| >= 4"));
                }
                if !(c > 0.0) {
                    return Err(Error::config("xi.c", "constant must be positive"));
                }
            }
            Self::Linear { dim, c } => {
                if dim == 0 {
                    return Err(Error::config("xi.dim", "dimension must be positive"));
                }
                if !(c > 0.0) {
                    return Err(Error::config("xi.c", "constant must be positive"));
                }
            }
            Self::Constant { value } => {
                if !(value > 0.0) {
                    return Err(Error::config("xi.value", "xi must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Panics when `n == 0`; the bound is undefined there.
    pub fn xi(&self, n: u64, delta: f64) -> f64 {
        assert!(n > 0, "estimation error queried with zero samples");
        let n_f = n as f64;
        match *self {
            Self::FiniteClass { size, c } => c * (2.0 * size as f64 / delta).ln() / n_f,
            Self::Linear { dim, c } => {
                let d = dim as f64;
                let m = n_f.max(d);
                c * (d * (std::f64::consts::E * m / d).ln() + (2.0 / delta).ln()) / n_f
            }
            Self::Constant { value } => value,
        }
    }
}
