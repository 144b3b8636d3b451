use serde::{Deserialize, Serialize};

use super::search::Proposer;
use super::{config_echo, EvaluationCounts, Method, RandomSearchConfig, SolveResult, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::seeds::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParallelConfig {
    /// Candidate decisions per iteration.
    pub candidates: usize,
    /// Fresh disturbances per iteration, shared by all candidates.
    pub n_delta: usize,
    pub iterations: usize,
    pub search: RandomSearchConfig,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            candidates: 100,
            n_delta: 2000,
            iterations: 50,
            search: RandomSearchConfig {
                global_restart_probability: 0.3,
                ..RandomSearchConfig::default()
            },
        }
    }
}

impl ParallelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidates == 0 || self.n_delta == 0 || self.iterations == 0 {
            return Err(Error::invalid("candidates, n_delta and iterations must be at least 1"));
        }
        self.search.validate()
    }

    /// Constraint evaluations spent by one run.
    pub fn constraint_budget(&self) -> u64 {
        (self.candidates * self.n_delta * self.iterations) as u64
    }
}

/// Parallel randomized baseline.
///
/// Each iteration draws `candidates` decisions from the global/local mixture
/// and `n_delta` fresh disturbances, estimates every candidate's violation on
/// that shared set, keeps those with `V̂ ≤ α`, and moves the incumbent to the
/// cheapest survivor if it strictly improves. The starting incumbent is a
/// uniform draw that is not checked, so it carries no cost until replaced.
pub fn parallel_randomized(spec: &ProblemSpec, cfg: &ParallelConfig, seed: u64) -> Result<SolveResult> {
    cfg.validate()?;
    let mut search_rng = seeds::rng(seeds::derive(seed, &[tag::SEARCH]));
    let mut delta_rng = seeds::rng(seeds::derive(seed, &[tag::SCENARIOS]));
    let domain = spec.domain();
    let alpha = spec.alpha();
    let mut counts = EvaluationCounts::default();
    let mut decision = domain.sample(&mut search_rng);
    let mut cost: Option<f64> = None;
    let mut trajectory = vec![TrajectoryPoint::new(0, &decision, None)];
    let proposer = Proposer::new(domain, &cfg.search);
    let dd = spec.disturbance_dim();
    let mut deltas = vec![0.0; cfg.n_delta * dd];
    for k in 1..=cfg.iterations {
        let centre = cost.map(|_| decision.as_slice());
        let cands: Vec<Vec<f64>> = (0..cfg.candidates)
            .map(|_| proposer.propose(centre, k, &mut search_rng))
            .collect();
        for d in deltas.chunks_mut(dd) {
            spec.disturbance().sample_into(&mut delta_rng, d);
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in cands.iter().enumerate() {
            let violations = deltas.chunks(dd).filter(|d| spec.constraint(c, d) > 0.0).count();
            counts.constraint += cfg.n_delta as u64;
            if violations as f64 / cfg.n_delta as f64 > alpha {
                continue;
            }
            let j = spec.cost(c);
            counts.objective += 1;
            if best.is_none_or(|(_, b)| j < b) {
                best = Some((i, j));
            }
        }
        if let Some((i, j)) = best {
            if cost.is_none_or(|c| j < c) {
                decision = cands[i].clone();
                cost = Some(j);
            }
        }
        trajectory.push(TrajectoryPoint::new(k, &decision, cost));
    }
    let final_cost = match cost {
        Some(c) => c,
        None => {
            counts.objective += 1;
            spec.cost(&decision)
        }
    };
    Ok(SolveResult {
        method: Method::Parallel,
        seed,
        decision,
        cost: final_cost,
        feasible: cost.is_some(),
        oracle_violation: None,
        trajectory,
        evaluations: counts,
        config: config_echo(cfg),
        scenarios: Vec::new(),
    })
}
