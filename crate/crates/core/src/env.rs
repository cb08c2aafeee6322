//! Synthetic realizable environments.
//!
//! Every environment draws i.i.d. `(context, reward vector)` pairs whose
//! conditional means are exactly the ground-truth predictor `f*`. Rewards are
//! Bernoulli, so they live in `{0, 1}` with no clipping.
//!
//! The learner only ever receives [`RoundDraw::context`] and the reward of
//! the action it played; the remaining fields of a draw are for regret
//! accounting.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::{
    argmax, induced_policy, validate_distribution, ActionIndex, Context, Features,
    FiniteFunctionClass, Policy, TablePredictor,
};
use crate::{Error, Result};

/// SplitMix64 finalizer applied to `seed + (stream + 1) * golden_gamma`.
///
/// Used to derive independent per-purpose seeds from one run seed: stream 0
/// builds the instance, stream 1 drives the environment, stream 2 drives the
/// learner's action sampling.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const INSTANCE_STREAM: u64 = 0;
pub const ENVIRONMENT_STREAM: u64 = 1;
pub const LEARNER_STREAM: u64 = 2;

/// One round of nature's randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDraw {
    pub context: Context,
    /// Full realized reward vector; only `rewards[a_t]` is revealed.
    pub rewards: Vec<f64>,
    /// Hidden conditional means `f*(x, .)`.
    pub means: Vec<f64>,
    /// `pi_{f*}(x)`.
    pub optimal: ActionIndex,
}

pub trait Environment: Send + Sync {
    fn num_actions(&self) -> usize;

    fn sample_round(&self, rng: &mut dyn rand::RngCore) -> RoundDraw;
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    let idx = cdf.partition_point(|&c| c <= u);
    idx.min(cdf.len() - 1)
}

/// Finite context space with an explicit context distribution and a finite
/// class containing `f*`.
#[derive(Debug, Clone)]
pub struct FiniteRealizableEnv {
    context_probs: Vec<f64>,
    cdf: Vec<f64>,
    class: Arc<FiniteFunctionClass>,
    star: usize,
}

impl FiniteRealizableEnv {
    pub fn new(
        context_probs: Vec<f64>,
        class: Arc<FiniteFunctionClass>,
        star: usize,
    ) -> Result<Self> {
        validate_distribution("environment.context_probs", &context_probs)?;
        if context_probs.len() != class.num_contexts() {
            return Err(Error::config(
                "environment.context_probs",
                "length does not match |X|",
            ));
        }
        if star >= class.len() {
            return Err(Error::config(
                "environment.star",
                "f* must be a member of the class",
            ));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = context_probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // zero-probability tail contexts must stay unreachable
        let last_live = context_probs.iter().rposition(|&p| p > 0.0).unwrap();
        cdf.truncate(last_live + 1);
        Ok(Self {
            context_probs,
            cdf,
            class,
            star,
        })
    }

    pub fn context_probs(&self) -> &[f64] {
        &self.context_probs
    }

    pub fn class(&self) -> &Arc<FiniteFunctionClass> {
        &self.class
    }

    pub fn star_index(&self) -> usize {
        self.star
    }

    pub fn f_star(&self) -> &TablePredictor {
        self.class.member(self.star)
    }

    pub fn optimal_policy(&self) -> Policy {
        induced_policy(self.f_star(), self.class.num_contexts())
    }

    pub fn num_contexts(&self) -> usize {
        self.class.num_contexts()
    }

    pub fn sample_context(&self, u: f64) -> usize {
        sample_index(&self.cdf, u)
    }
}

impl Environment for FiniteRealizableEnv {
    fn num_actions(&self) -> usize {
        self.class.num_actions()
    }

    fn sample_round(&self, rng: &mut dyn rand::RngCore) -> RoundDraw {
        let x = self.sample_context(rng.random());
        let means = self.f_star().row(x).to_vec();
        let rewards = means
            .iter()
            .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 })
            .collect();
        RoundDraw {
            context: Context::Index(x),
            optimal: argmax(&means),
            rewards,
            means,
        }
    }
}

/// Linear rewards `theta* . x_a` with per-action features in the unit ball.
///
/// Features are drawn uniformly from the unit ball and reflected through the
/// hyperplane orthogonal to `theta*` whenever their mean would be negative,
/// so every realized mean lies in `[0, |theta*|]`.
#[derive(Debug, Clone)]
pub struct LinearRealizableEnv {
    theta: Vec<f64>,
    num_actions: usize,
}

impl LinearRealizableEnv {
    pub fn new(theta: Vec<f64>, num_actions: usize) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::config(
                "environment.dim",
                "dimension must be positive",
            ));
        }
        if num_actions < 2 {
            return Err(Error::config(
                "environment.actions",
                "need at least two actions",
            ));
        }
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm <= 1.0 + 1e-12) {
            return Err(Error::config("environment.theta", "need 0 < |theta| <= 1"));
        }
        Ok(Self { theta, num_actions })
    }

    /// A uniformly random unit-norm `theta*`.
    pub fn random<R: Rng + ?Sized>(dim: usize, num_actions: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config(
                "environment.dim",
                "dimension must be positive",
            ));
        }
        Self::new(unit_vector(dim, rng), num_actions)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn mean(&self, phi: &[f64]) -> f64 {
        self.theta.iter().zip(phi).map(|(t, p)| t * p).sum()
    }
}

fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl Environment for LinearRealizableEnv {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn sample_round(&self, rng: &mut dyn rand::RngCore) -> RoundDraw {
        let d = self.dim();
        let sq: f64 = self.theta.iter().map(|t| t * t).sum();
        let mut data = Vec::with_capacity(self.num_actions * d);
        let mut means = Vec::with_capacity(self.num_actions);
        for _ in 0..self.num_actions {
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            let mut phi: Vec<f64> = unit_vector(d, rng)
                .into_iter()
                .map(|v| v * radius)
                .collect();
            let mut m = self.mean(&phi);
            if m < 0.0 {
                let scale = 2.0 * m / sq;
                for (p, t) in phi.iter_mut().zip(&self.theta) {
                    *p -= scale * t;
                }
                m = self.mean(&phi).max(0.0);
            }
            means.push(m.min(1.0));
            data.extend_from_slice(&phi);
        }
        let rewards = means
            .iter()
            .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 })
            .collect();
        let features = Features::new(d, data).expect("reflection preserves the unit ball");
        RoundDraw {
            context: Context::Features(features),
            optimal: argmax(&means),
            rewards,
            means,
        }
    }
}

/// A planted row: one best action with mean at least `gap` above every other.
fn planted_row<R: Rng + ?Sized>(num_actions: usize, gap: f64, rng: &mut R) -> Vec<f64> {
    let best = rng.random_range(0..num_actions);
    let top = rng.random_range(gap.max(0.5)..=1.0);
    (0..num_actions)
        .map(|a| {
            if a == best {
                top
            } else {
                rng.random_range(0.0..=top - gap)
            }
        })
        .collect()
}

/// Cells where two tables differ by more than this count as disagreements.
pub const DISAGREEMENT_TOL: f64 = 0.05;

/// Fraction of `(x, a)` cells where `f` and `g` disagree.
pub fn disagreement(f: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    let mut cells = 0usize;
    let mut differ = 0usize;
    for (rf, rg) in f.iter().zip(g) {
        for (a, b) in rf.iter().zip(rg) {
            cells += 1;
            differ += ((a - b).abs() > DISAGREEMENT_TOL) as usize;
        }
    }
    differ as f64 / cells as f64
}

/// Builds a finite realizable instance with a planted `f*`.
///
/// `f*` has a unique best action per context with margin at least `gap`.
/// Each distractor replaces about half of `f*`'s rows with fresh planted rows
/// and disagrees with `f*` on at least a quarter of all cells. `f*` is never
/// member 0, so the epoch-1 predictor is always a distractor.
pub fn make_planted_instance<R: Rng + ?Sized>(
    num_contexts: usize,
    num_actions: usize,
    class_size: usize,
    gap: f64,
    rng: &mut R,
) -> Result<FiniteRealizableEnv> {
    if num_contexts == 0 {
        return Err(Error::config(
            "environment.contexts",
            "need at least one context",
        ));
    }
    if num_actions < 2 {
        return Err(Error::config(
            "environment.actions",
            "need at least two actions",
        ));
    }
    if class_size < FiniteFunctionClass::MIN_SIZE {
        return Err(Error::config(
            "environment.class_size",
            "class needs at least 4 members",
        ));
    }
    if !(gap > 0.0 && gap <= 0.5) {
        return Err(Error::config("environment.gap", "gap must lie in (0, 0.5]"));
    }

    let truth: Vec<Vec<f64>> = (0..num_contexts)
        .map(|_| planted_row(num_actions, gap, rng))
        .collect();
    let star = rng.random_range(1..class_size);
    let mut tables = Vec::with_capacity(class_size);
    for id in 0..class_size {
        if id == star {
            tables.push(truth.clone());
            continue;
        }
        let mut attempts = 0;
        let table = loop {
            let candidate: Vec<Vec<f64>> = truth
                .iter()
                .map(|row| {
                    if rng.random_bool(0.5) {
                        planted_row(num_actions, gap, rng)
                    } else {
                        row.clone()
                    }
                })
                .collect();
            if disagreement(&candidate, &truth) >= 0.25 {
                break candidate;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::config("environment", "could not build distractors"));
            }
        };
        tables.push(table);
    }

    let weights: Vec<f64> = (0..num_contexts)
        .map(|_| rng.random_range(0.5..1.5))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..num_contexts - 1].iter().sum();
    probs[num_contexts - 1] = 1.0 - head;

    let class = Arc::new(FiniteFunctionClass::new(&tables)?);
    FiniteRealizableEnv::new(probs, class, star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{InteractionLog, Predictor};
    use crate::oracle::erm_least_squares;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_env(value: f64) -> FiniteRealizableEnv {
        let tables = vec![vec![vec![value; 3]; 2]; 4];
        let class = Arc::new(FiniteFunctionClass::new(&tables).unwrap());
        FiniteRealizableEnv::new(vec![0.5, 0.5], class, 2).unwrap()
    }

    #[test]
    fn bernoulli_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ones = constant_env(1.0);
        let zeros = constant_env(0.0);
        for _ in 0..1000 {
            assert_eq!(ones.sample_round(&mut rng).rewards, vec![1.0; 3]);
            assert_eq!(zeros.sample_round(&mut rng).rewards, vec![0.0; 3]);
        }
    }

    #[test]
    fn reward_means_match_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let env = make_planted_instance(3, 3, 5, 0.2, &mut rng).unwrap();
        let x = 1;
        let mut sums = [0.0; 3];
        let mut n = 0usize;
        while n < 100_000 {
            let draw = env.sample_round(&mut rng);
            if draw.context == Context::Index(x) {
                for a in 0..3 {
                    sums[a] += draw.rewards[a];
                }
                n += 1;
            }
        }
        for a in 0..3 {
            let p = env.f_star().get(x, a);
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
            assert!((sums[a] / n as f64 - p).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn planted_instance_postconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let env = make_planted_instance(6, 2, 8, 0.3, &mut rng).unwrap();
            let truth = env.f_star().rows();
            for row in &truth {
                let best = argmax(row);
                for (a, v) in row.iter().enumerate() {
                    if a != best {
                        assert!(row[best] >= v + 0.3 - 1e-12);
                    }
                }
            }
            for m in env.class().members() {
                if m.id() != Some(env.star_index()) {
                    assert!(disagreement(&m.rows(), &truth) >= 0.25);
                }
            }
            assert_ne!(env.star_index(), 0);
        }
    }

    #[test]
    fn planted_instance_rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(make_planted_instance(3, 2, 8, 0.6, &mut rng).is_err());
        assert!(make_planted_instance(3, 2, 8, 0.0, &mut rng).is_err());
        assert!(make_planted_instance(3, 2, 3, 0.2, &mut rng).is_err());
        assert!(make_planted_instance(3, 1, 8, 0.2, &mut rng).is_err());
    }

    #[test]
    fn greedy_on_first_member_is_usually_wrong() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 200;
        let mut wrong = 0;
        for _ in 0..trials {
            let env = make_planted_instance(5, 3, 6, 0.2, &mut rng).unwrap();
            let first = induced_policy(env.class().member(0), 5);
            wrong += (first != env.optimal_policy()) as usize;
        }
        assert!(wrong * 2 >= trials, "{wrong} / {trials}");
    }

    #[test]
    fn planted_truth_is_recoverable_from_uniform_logging() {
        let mut env_rng = ChaCha8Rng::seed_from_u64(6);
        let env = make_planted_instance(10, 4, 20, 0.2, &mut env_rng).unwrap();
        let mut log = InteractionLog::new();
        for _ in 0..10_000 {
            let draw = env.sample_round(&mut env_rng);
            let a = env_rng.random_range(0..4);
            log.push(draw.context, a, draw.rewards[a]);
        }
        let fit = erm_least_squares(env.class(), log.records());
        assert_eq!(fit.id(), Some(env.star_index()));
    }

    #[test]
    fn context_stream_halves_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let env = make_planted_instance(4, 2, 4, 0.2, &mut rng).unwrap();
        let n = 50_000;
        let mut halves = [[0usize; 4]; 2];
        for i in 0..2 * n {
            let x = env.sample_round(&mut rng).context.index().unwrap();
            halves[i / n][x] += 1;
        }
        for x in 0..4 {
            let p = env.context_probs()[x];
            let se = (2.0 * p * (1.0 - p) / n as f64).sqrt();
            let diff = (halves[0][x] as f64 - halves[1][x] as f64) / n as f64;
            assert!(diff.abs() <= 4.0 * se, "context {x}: {diff}");
        }
    }

    #[test]
    fn zero_probability_contexts_never_drawn() {
        let tables = vec![vec![vec![0.5, 0.5]; 3]; 4];
        let class = Arc::new(FiniteFunctionClass::new(&tables).unwrap());
        let env = FiniteRealizableEnv::new(vec![0.0, 1.0, 0.0], class, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            assert_eq!(env.sample_round(&mut rng).context, Context::Index(1));
        }
    }

    #[test]
    fn linear_means_are_valid_and_realizable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let env = LinearRealizableEnv::random(5, 4, &mut rng).unwrap();
        for _ in 0..2000 {
            let draw = env.sample_round(&mut rng);
            let Context::Features(f) = &draw.context else {
                panic!()
            };
            for a in 0..4 {
                let phi = f.action(a);
                let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= 1.0 + 1e-12);
                assert!((0.0..=1.0).contains(&draw.means[a]));
                assert!((env.mean(phi) - draw.means[a]).abs() < 1e-12);
            }
            let truth = crate::oracle::LinearPredictor::new(env.theta().to_vec(), 4);
            assert_eq!(
                truth.eval(&draw.context, draw.optimal),
                draw.means[draw.optimal]
            );
        }
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        let s: Vec<u64> = (0..3).map(|k| derive_seed(42, k)).collect();
        assert!(s[0] != s[1] && s[1] != s[2] && s[0] != s[2]);
        assert_eq!(derive_seed(42, 1), derive_seed(42, 1));
    }
}
