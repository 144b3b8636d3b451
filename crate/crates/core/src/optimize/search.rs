use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TrajectoryPoint;
use crate::error::{Error, Result};
use crate::problem::BoxDomain;

/// Shape of the local proposal around the incumbent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Uniform in the open ball `‖z − z*‖² < ε_v`.
    #[default]
    UniformBall,
    /// Isotropic normal with per-coordinate sd `√ε_v / (2√n)`, truncated to the ball.
    Normal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSearchConfig {
    /// Squared neighbourhood radius `ε_v` in unit-box coordinates. `None`
    /// means `(0.1·√n)²`, a tenth of the normalized box diagonal.
    pub neighborhood_eps: Option<f64>,
    pub proposal: Proposal,
    pub max_iterations: usize,
    /// Chance that a proposal is a fresh uniform draw over the whole box.
    pub global_restart_probability: f64,
    /// Per-iteration geometric shrink factor applied to the radius.
    pub radius_decay: f64,
    /// Uniform draws tried when looking for a feasible starting point.
    pub init_attempts: usize,
}

impl Default for RandomSearchConfig {
    fn default() -> Self {
        Self {
            neighborhood_eps: None,
            proposal: Proposal::UniformBall,
            max_iterations: 1000,
            global_restart_probability: 0.1,
            radius_decay: 0.995,
            init_attempts: 1000,
        }
    }
}

impl RandomSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = self.neighborhood_eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!("neighbourhood ε_v must be positive, got {eps}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.global_restart_probability) {
            return Err(Error::invalid(format!(
                "global restart probability must lie in [0, 1], got {}",
                self.global_restart_probability
            )));
        }
        if !(self.radius_decay > 0.0 && self.radius_decay <= 1.0) {
            return Err(Error::invalid(format!(
                "radius decay must lie in (0, 1], got {}",
                self.radius_decay
            )));
        }
        if self.init_attempts == 0 {
            return Err(Error::invalid("init_attempts must be at least 1"));
        }
        Ok(())
    }

    pub fn eps_for(&self, dim: usize) -> f64 {
        self.neighborhood_eps.unwrap_or(0.01 * dim as f64)
    }
}

/// Draws candidates from the global/local mixture.
pub(crate) struct Proposer<'a> {
    domain: &'a BoxDomain,
    radius: f64,
    proposal: Proposal,
    p_global: f64,
    decay: f64,
}

impl<'a> Proposer<'a> {
    pub(crate) fn new(domain: &'a BoxDomain, cfg: &RandomSearchConfig) -> Self {
        Self {
            domain,
            radius: cfg.eps_for(domain.dim()).sqrt(),
            proposal: cfg.proposal,
            p_global: cfg.global_restart_probability,
            decay: cfg.radius_decay,
        }
    }

    /// Candidate for iteration `k`; a global draw when there is no centre.
    pub(crate) fn propose<R: Rng + ?Sized>(&self, centre: Option<&[f64]>, k: usize, rng: &mut R) -> Vec<f64> {
        let centre = match centre {
            Some(c) if rng.random::<f64>() >= self.p_global => c,
            _ => return self.domain.sample(rng),
        };
        let n = self.domain.dim();
        let r = self.radius * self.decay.powi(k.min(i32::MAX as usize) as i32);
        let step = match self.proposal {
            Proposal::UniformBall => {
                let dir = normal_vector(n, rng);
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let len = r * rng.random::<f64>().powf(1.0 / n as f64);
                if norm > 0.0 {
                    dir.into_iter().map(|x| x / norm * len).collect()
                } else {
                    vec![0.0; n]
                }
            }
            Proposal::Normal => {
                let sd = r / (2.0 * (n as f64).sqrt());
                loop {
                    let s: Vec<f64> = normal_vector(n, rng).into_iter().map(|x| x * sd).collect();
                    if s.iter().map(|x| x * x).sum::<f64>() < r * r {
                        break s;
                    }
                }
            }
        };
        let z = self.domain.to_unit(centre);
        let moved: Vec<f64> = z.iter().zip(&step).map(|(a, b)| (a + b).clamp(0.0, 1.0)).collect();
        let mut u = self.domain.from_unit(&moved);
        self.domain.clamp(&mut u);
        u
    }
}

fn normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub decision: Vec<f64>,
    pub cost: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub iterations: usize,
    pub objective_evaluations: u64,
    pub feasibility_checks: u64,
}

/// Randomized local search with feasibility predicate.
///
/// Starts at the first feasible uniform draw, then proposes from the
/// neighbourhood mixture and accepts a candidate iff it is feasible and
/// strictly cheaper. The objective is evaluated first so the (typically more
/// expensive) feasibility check only runs on improving candidates. The
/// trajectory records the start and every accepted move.
pub fn random_search<F, G, R>(
    objective: F,
    feasible: G,
    domain: &BoxDomain,
    cfg: &RandomSearchConfig,
    rng: &mut R,
) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64,
    G: FnMut(&[f64]) -> bool,
    R: Rng + ?Sized,
{
    random_search_until(objective, feasible, || false, domain, cfg, rng)
}

/// [`random_search`] that also stops as soon as `exhausted()` returns true
/// before a feasibility check.
pub(crate) fn random_search_until<F, G, S, R>(
    objective: F,
    mut feasible: G,
    mut exhausted: S,
    domain: &BoxDomain,
    cfg: &RandomSearchConfig,
    rng: &mut R,
) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64,
    G: FnMut(&[f64]) -> bool,
    S: FnMut() -> bool,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut checks = 0u64;
    let mut start = None;
    for _ in 0..cfg.init_attempts {
        if exhausted() {
            break;
        }
        let u = domain.sample(rng);
        checks += 1;
        if feasible(&u) {
            start = Some(u);
            break;
        }
    }
    let Some(mut best) = start else {
        return Err(Error::Infeasible(format!(
            "no feasible starting point after {checks} uniform draws"
        )));
    };
    let mut best_cost = objective(&best);
    let mut evals = 1u64;
    let mut trajectory = vec![TrajectoryPoint::new(0, &best, Some(best_cost))];
    let proposer = Proposer::new(domain, cfg);
    let mut iterations = 1;
    for k in 1..cfg.max_iterations {
        let cand = proposer.propose(Some(&best), k, rng);
        let c = objective(&cand);
        evals += 1;
        iterations = k + 1;
        if c < best_cost {
            if exhausted() {
                break;
            }
            checks += 1;
            if feasible(&cand) {
                best = cand;
                best_cost = c;
                trajectory.push(TrajectoryPoint::new(k, &best, Some(best_cost)));
            }
        }
    }
    Ok(SearchOutcome {
        decision: best,
        cost: best_cost,
        trajectory,
        iterations,
        objective_evaluations: evals,
        feasibility_checks: checks,
    })
}
