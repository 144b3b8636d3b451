//! Chance-constrained solvers.
//!
//! * [`random_search`]: generic randomized local search with a feasibility predicate.
//! * [`explore_optimizer`]: candidates filtered through a learned violation map.
//! * [`parallel_randomized`]: candidates filtered by fresh Monte-Carlo estimates each iteration.
//! * [`scenario_solve`]: random search on the sampled-constraint program.

mod explore;
mod parallel;
mod scenario;
mod search;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::seeds::{self, tag};
use crate::vmap::monte_carlo_violation;

pub use explore::{explore_optimizer, ExplorationConfig};
pub use parallel::{parallel_randomized, ParallelConfig};
pub use scenario::{scenario_feasible, scenario_sample_bound, scenario_solve, scenario_solve_with_set, ScenarioConfig};
pub use search::{random_search, Proposal, RandomSearchConfig, SearchOutcome};

/// Fresh disturbance draws used to referee every final decision.
pub const ORACLE_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Parallel,
    Scenario,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Parallel, Method::Scenario];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Parallel => "parallel",
            Method::Scenario => "scenario",
        }
    }

    pub fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?} (expected proposed, parallel or scenario)")))
    }
}

/// Incumbent after an iteration. `cost` is `None` while no verified-feasible
/// incumbent exists yet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub decision: Vec<f64>,
    pub cost: Option<f64>,
}

impl TrajectoryPoint {
    pub fn new(iteration: usize, decision: &[f64], cost: Option<f64>) -> Self {
        Self {
            iteration,
            decision: decision.to_vec(),
            cost,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationCounts {
    pub objective: u64,
    /// Constraint evaluations `h(u, δ)`, including those spent training a map.
    pub constraint: u64,
    pub map_queries: u64,
    pub oracle: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    pub seed: u64,
    pub decision: Vec<f64>,
    pub cost: f64,
    /// False when no candidate ever passed the method's feasibility filter.
    pub feasible: bool,
    pub oracle_violation: Option<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub evaluations: EvaluationCounts,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Vec<f64>>,
}

impl SolveResult {
    /// Fills `oracle_violation` with a fresh `samples`-draw estimate seeded from the run seed.
    pub fn with_oracle(mut self, spec: &ProblemSpec, samples: usize) -> Result<Self> {
        self.oracle_violation = Some(oracle_violation(spec, &self.decision, samples, self.seed)?);
        self.evaluations.oracle = samples as u64;
        Ok(self)
    }

    /// True when the recorded costs never increase and no `None` follows a `Some`.
    pub fn trajectory_is_monotone(&self) -> bool {
        let mut last: Option<f64> = None;
        for p in &self.trajectory {
            match (last, p.cost) {
                (Some(_), None) => return false,
                (Some(a), Some(b)) if b > a => return false,
                _ => {}
            }
            last = p.cost.or(last);
        }
        true
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json("serializing result", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Post-hoc Monte-Carlo violation of `u` on a stream derived from `seed`.
pub fn oracle_violation(spec: &ProblemSpec, u: &[f64], samples: usize, seed: u64) -> Result<f64> {
    let mut rng = seeds::rng(seeds::derive(seed, &[tag::ORACLE]));
    monte_carlo_violation(spec, u, samples, &mut rng)
}

pub(crate) fn config_echo<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configs serialize to JSON")
}
