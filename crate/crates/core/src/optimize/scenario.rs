use std::cell::{Cell, RefCell};

use serde::{Deserialize, Serialize};

use super::search::random_search_until;
use super::{config_echo, EvaluationCounts, Method, RandomSearchConfig, SolveResult, TrajectoryPoint};
use crate::error::{check_dim, Error, Result};
use crate::problem::ProblemSpec;
use crate::seeds::{self, tag};

/// Smallest scenario count `⌈(2/α)·ln(1/β) + 2n + (2n/α)·ln(2/α)⌉` for
/// violation level `alpha` with confidence `1 − beta` in `n` decision variables.
pub fn scenario_sample_bound(alpha: f64, beta: f64, n_u: usize) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "alpha and beta must lie in (0, 1), got alpha={alpha}, beta={beta}"
        )));
    }
    if n_u == 0 {
        return Err(Error::invalid("decision dimension must be at least 1"));
    }
    let n = n_u as f64;
    let bound = 2.0 / alpha * (1.0 / beta).ln() + 2.0 * n + 2.0 * n / alpha * (2.0 / alpha).ln();
    Ok(bound.ceil() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n_scenarios: usize,
    pub restarts: usize,
    pub search: RandomSearchConfig,
    /// Cap on constraint evaluations across all restarts. Each restart gets an
    /// equal share of what is left and stops once a full scenario sweep would
    /// no longer fit.
    pub max_evaluations: Option<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_scenarios: 2000,
            restarts: 10,
            search: RandomSearchConfig {
                max_iterations: 20_000,
                init_attempts: 100_000,
                ..RandomSearchConfig::default()
            },
            max_evaluations: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(Error::invalid("scenario program needs at least one scenario"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        self.search.validate()
    }
}

/// `max_i h(u, δ_i) ≤ 0`, stopping at the first violated scenario.
/// Returns feasibility and the number of constraint evaluations spent.
pub fn scenario_feasible<D: AsRef<[f64]>>(spec: &ProblemSpec, scenarios: &[D], u: &[f64]) -> (bool, u64) {
    for (i, d) in scenarios.iter().enumerate() {
        if spec.constraint(u, d.as_ref()) > 0.0 {
            return (false, i as u64 + 1);
        }
    }
    (true, scenarios.len() as u64)
}

/// Short-circuit scenario check that moves each violated scenario to the
/// front of the scan order, so binding scenarios are tried first next time.
struct ScenarioScan<'a> {
    spec: &'a ProblemSpec,
    scenarios: &'a [Vec<f64>],
    order: Vec<usize>,
}

impl<'a> ScenarioScan<'a> {
    fn new(spec: &'a ProblemSpec, scenarios: &'a [Vec<f64>]) -> Self {
        Self {
            spec,
            scenarios,
            order: (0..scenarios.len()).collect(),
        }
    }

    fn check(&mut self, u: &[f64]) -> (bool, u64) {
        for pos in 0..self.order.len() {
            let i = self.order[pos];
            if self.spec.constraint(u, &self.scenarios[i]) > 0.0 {
                self.order[..=pos].rotate_right(1);
                return (false, pos as u64 + 1);
            }
        }
        (true, self.order.len() as u64)
    }
}

/// Draws `n_scenarios` disturbances and solves the sampled program.
pub fn scenario_solve(spec: &ProblemSpec, cfg: &ScenarioConfig, seed: u64) -> Result<SolveResult> {
    cfg.validate()?;
    let mut rng = seeds::rng(seeds::derive(seed, &[tag::SCENARIOS]));
    let scenarios: Vec<Vec<f64>> = (0..cfg.n_scenarios)
        .map(|_| spec.disturbance().sample(&mut rng))
        .collect();
    scenario_solve_with_set(spec, scenarios, cfg, seed)
}

/// Minimizes `J` subject to `h(u, δ_i) ≤ 0` for every given scenario with
/// multi-start random search. `cfg.n_scenarios` is ignored in favour of the
/// set's length.
pub fn scenario_solve_with_set(
    spec: &ProblemSpec,
    scenarios: Vec<Vec<f64>>,
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<SolveResult> {
    if scenarios.is_empty() {
        return Err(Error::invalid("scenario program needs at least one scenario"));
    }
    for d in &scenarios {
        check_dim("scenario", spec.disturbance_dim(), d.len())?;
    }
    let cfg = ScenarioConfig {
        n_scenarios: scenarios.len(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let sweep = scenarios.len() as u64;
    let used = Cell::new(0u64);
    let scan = RefCell::new(ScenarioScan::new(spec, &scenarios));
    let mut counts = EvaluationCounts::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut trajectory = Vec::new();
    let mut offset = 0;
    let mut last_error = None;
    for r in 0..cfg.restarts {
        let start = used.get();
        let share = cfg
            .max_evaluations
            .map(|cap| cap.saturating_sub(start) / (cfg.restarts - r) as u64);
        let exhausted = || share.is_some_and(|s| used.get() - start + sweep > s);
        let feasible = |u: &[f64]| {
            let (ok, n) = scan.borrow_mut().check(u);
            used.set(used.get() + n);
            ok
        };
        let mut rng = seeds::rng(seeds::derive(seed, &[tag::SEARCH, r as u64]));
        let out = match random_search_until(|u| spec.cost(u), feasible, exhausted, spec.domain(), &cfg.search, &mut rng) {
            Ok(out) => out,
            Err(e @ Error::Infeasible(_)) => {
                last_error = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        counts.objective += out.objective_evaluations;
        for p in &out.trajectory {
            let cost = p.cost.expect("random search records verified costs");
            if best.as_ref().is_none_or(|(_, b)| cost < *b) {
                best = Some((p.decision.clone(), cost));
                trajectory.push(TrajectoryPoint::new(offset + p.iteration, &p.decision, Some(cost)));
            }
        }
        offset += out.iterations;
    }
    counts.constraint = used.get();
    let Some((decision, cost)) = best else {
        return Err(last_error.unwrap_or_else(|| Error::Infeasible("no restart found a feasible point".into())));
    };
    Ok(SolveResult {
        method: Method::Scenario,
        seed,
        decision,
        cost,
        feasible: true,
        oracle_violation: None,
        trajectory,
        evaluations: counts,
        config: config_echo(&cfg),
        scenarios,
    })
}
