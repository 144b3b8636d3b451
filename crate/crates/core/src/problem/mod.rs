//! Chance-constrained problem definitions.
//!
//! A [`ProblemSpec`] bundles an objective `J(u)`, a constraint `h(u, δ)`, a box
//! decision domain, a disturbance distribution and the violation level `α`.
//! Evaluators are plain callbacks so new instances need no solver changes.
//! Evaluations outside the box are allowed; the samplers and optimizers are
//! what keep decisions inside it.

mod benchmark;
pub mod expr;
mod file;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub use benchmark::{builtin, ncvx_2d, ncvx_2d_constraint, ncvx_2d_cost, BUILTIN_NAMES, NCVX_2D};
pub use file::{load_problem, resolve_problem, FunctionSpec, ProblemFile};

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Constraint = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Axis-aligned decision box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxDomain {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BoxDomain::new(raw.lower, raw.upper)
    }
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("decision box must have at least one coordinate"));
        }
        check_dim("box upper bound", lower.len(), upper.len())?;
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "box coordinate {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Maps `u` to unit-box coordinates `(u − lower) / (upper − lower)`.
    pub fn to_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, x)| (x - self.lower[i]) / self.width(i))
            .collect()
    }

    pub fn from_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, t)| self.lower[i] + t * self.width(i))
            .collect()
    }

    pub fn clamp(&self, u: &mut [f64]) {
        for (i, x) in u.iter_mut().enumerate() {
            *x = x.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// One uniform draw from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let t: f64 = rng.random();
                (lo + t * (hi - lo)).min(*hi)
            })
            .collect()
    }

    /// Regular lattice with `per_axis[i]` points on axis `i`, endpoints included.
    /// Points are in row-major order: the last axis varies fastest.
    pub fn lattice_axes(&self, per_axis: &[usize]) -> Result<Vec<Vec<f64>>> {
        check_dim("lattice axis counts", self.dim(), per_axis.len())?;
        per_axis
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if n < 2 {
                    return Err(Error::invalid(format!(
                        "lattice needs at least 2 points per axis, axis {i} has {n}"
                    )));
                }
                let (lo, hi) = (self.lower[i], self.upper[i]);
                Ok((0..n)
                    .map(|k| {
                        if k == n - 1 {
                            hi
                        } else {
                            lo + (hi - lo) * k as f64 / (n - 1) as f64
                        }
                    })
                    .collect())
            })
            .collect()
    }
}

/// Disturbance distribution: i.i.d. coordinates of a normal or uniform law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Disturbance {
    Normal { mean: f64, std: f64, dim: usize },
    Uniform { low: f64, high: f64, dim: usize },
}

impl Disturbance {
    pub fn standard_normal(dim: usize) -> Self {
        Disturbance::Normal {
            mean: 0.0,
            std: 1.0,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Disturbance::Normal { dim, .. } | Disturbance::Uniform { dim, .. } => dim,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("disturbance dimension must be positive"));
        }
        match *self {
            Disturbance::Normal { mean, std, .. } if !(mean.is_finite() && std.is_finite() && std > 0.0) => {
                Err(Error::invalid(format!("normal disturbance needs finite mean and std > 0, got ({mean}, {std})")))
            }
            Disturbance::Uniform { low, high, .. } if !(low.is_finite() && high.is_finite() && low < high) => {
                Err(Error::invalid(format!("uniform disturbance needs low < high, got [{low}, {high}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            Disturbance::Normal { mean, std, .. } => {
                for x in out {
                    let z: f64 = StandardNormal.sample(rng);
                    *x = mean + std * z;
                }
            }
            Disturbance::Uniform { low, high, .. } => {
                for x in out {
                    let t: f64 = rng.random();
                    *x = low + t * (high - low);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// A chance-constrained program instance.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    objective: Objective,
    constraint: Constraint,
    domain: BoxDomain,
    disturbance: Disturbance,
    alpha: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("disturbance", &self.disturbance)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        domain: BoxDomain,
        disturbance: Disturbance,
        alpha: f64,
        objective: Objective,
        constraint: Constraint,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        disturbance.validate()?;
        Ok(Self {
            name: name.into(),
            objective,
            constraint,
            domain,
            disturbance,
            alpha,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn disturbance(&self) -> &Disturbance {
        &self.disturbance
    }

    pub fn decision_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.disturbance.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same problem with a different violation level.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.domain.clone(),
            self.disturbance.clone(),
            alpha,
            self.objective.clone(),
            self.constraint.clone(),
        )
    }

    /// Same problem with the constraint replaced.
    pub fn with_constraint(&self, constraint: Constraint) -> Self {
        Self {
            constraint,
            ..self.clone()
        }
    }

    pub fn evaluate_cost(&self, u: &[f64]) -> Result<f64> {
        check_dim("decision vector", self.decision_dim(), u.len())?;
        Ok((self.objective)(u))
    }

    pub fn evaluate_constraint(&self, u: &[f64], delta: &[f64]) -> Result<f64> {
        check_dim("decision vector", self.decision_dim(), u.len())?;
        check_dim("disturbance vector", self.disturbance_dim(), delta.len())?;
        Ok((self.constraint)(u, delta))
    }

    // Unchecked evaluators for inner loops whose dimensions were validated once.
    #[inline]
    pub(crate) fn cost(&self, u: &[f64]) -> f64 {
        (self.objective)(u)
    }

    #[inline]
    pub(crate) fn constraint(&self, u: &[f64], delta: &[f64]) -> f64 {
        (self.constraint)(u, delta)
    }
}

/// `count` i.i.d. disturbance draws.
pub fn sample_disturbance<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    rng: &mut R,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::invalid("disturbance sample count must be positive"));
    }
    Ok((0..count).map(|_| spec.disturbance.sample(rng)).collect())
}

/// `count` i.i.d. uniform draws from the box.
pub fn sample_decision_uniform<R: Rng + ?Sized>(
    domain: &BoxDomain,
    rng: &mut R,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::invalid("decision sample count must be positive"));
    }
    Ok((0..count).map(|_| domain.sample(rng)).collect())
}
