use serde::{Deserialize, Serialize};

use super::search::Proposer;
use super::{config_echo, EvaluationCounts, Method, RandomSearchConfig, SolveResult, TrajectoryPoint};
use crate::error::{check_dim, Error, Result};
use crate::problem::ProblemSpec;
use crate::seeds::{self, tag};
use crate::vmap::ViolationModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationConfig {
    /// Candidates drawn per iteration.
    pub batch_size: usize,
    pub alpha: f64,
    /// Candidates survive when the map predicts at most `alpha − alpha_margin`.
    pub alpha_margin: f64,
    pub iterations: usize,
    /// Re-draw the incumbent when an iteration has no survivors instead of
    /// keeping it. Breaks trajectory monotonicity.
    pub reinit_on_empty: bool,
    pub search: RandomSearchConfig,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        Self {
            batch_size: 50,
            alpha: 0.05,
            alpha_margin: 0.005,
            iterations: 200,
            reinit_on_empty: false,
            search: RandomSearchConfig {
                global_restart_probability: 0.3,
                ..RandomSearchConfig::default()
            },
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.iterations == 0 {
            return Err(Error::invalid("batch_size and iterations must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.alpha_margin >= 0.0 && self.alpha_margin < self.alpha) {
            return Err(Error::invalid(format!(
                "alpha margin must lie in [0, alpha), got {}",
                self.alpha_margin
            )));
        }
        self.search.validate()
    }

    pub fn threshold(&self) -> f64 {
        self.alpha - self.alpha_margin
    }
}

struct Incumbent {
    decision: Vec<f64>,
    cost: Option<f64>,
}

/// Map-guided exploration.
///
/// Each iteration draws `batch_size` candidates from the global/local
/// mixture, keeps those whose predicted violation is at most
/// `alpha − alpha_margin`, and moves the incumbent to the cheapest survivor
/// if it strictly improves on it (ties go to the earliest draw).
pub fn explore_optimizer<M: ViolationModel + ?Sized>(
    spec: &ProblemSpec,
    map: &M,
    cfg: &ExplorationConfig,
    seed: u64,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dim("violation map input", spec.decision_dim(), map.input_dim())?;
    let mut rng = seeds::rng(seeds::derive(seed, &[tag::SEARCH]));
    let domain = spec.domain();
    let threshold = cfg.threshold();
    let mut counts = EvaluationCounts::default();

    let initialize = |rng: &mut seeds::Rng, counts: &mut EvaluationCounts| -> Incumbent {
        let mut first = None;
        for _ in 0..cfg.search.init_attempts {
            let u = domain.sample(rng);
            counts.map_queries += 1;
            if map.violation(&u) <= threshold {
                counts.objective += 1;
                return Incumbent {
                    cost: Some(spec.cost(&u)),
                    decision: u,
                };
            }
            first.get_or_insert(u);
        }
        Incumbent {
            decision: first.expect("init_attempts >= 1"),
            cost: None,
        }
    };

    let mut inc = initialize(&mut rng, &mut counts);
    let mut trajectory = vec![TrajectoryPoint::new(0, &inc.decision, inc.cost)];
    let proposer = Proposer::new(domain, &cfg.search);
    for k in 1..=cfg.iterations {
        let centre = inc.cost.map(|_| inc.decision.as_slice());
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..cfg.batch_size {
            let cand = proposer.propose(centre, k, &mut rng);
            counts.map_queries += 1;
            if map.violation(&cand) > threshold {
                continue;
            }
            let c = spec.cost(&cand);
            counts.objective += 1;
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((cand, c));
            }
        }
        match best {
            Some((cand, c)) => {
                if inc.cost.is_none_or(|ic| c < ic) {
                    inc = Incumbent {
                        decision: cand,
                        cost: Some(c),
                    };
                }
            }
            None if cfg.reinit_on_empty => inc = initialize(&mut rng, &mut counts),
            None => {}
        }
        trajectory.push(TrajectoryPoint::new(k, &inc.decision, inc.cost));
    }
    let cost = match inc.cost {
        Some(c) => c,
        None => {
            counts.objective += 1;
            spec.cost(&inc.decision)
        }
    };
    Ok(SolveResult {
        method: Method::Proposed,
        seed,
        feasible: inc.cost.is_some(),
        decision: inc.decision,
        cost,
        oracle_violation: None,
        trajectory,
        evaluations: counts,
        config: config_echo(cfg),
        scenarios: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ncvx_2d;

    pub(crate) struct Constant(pub f64);

    impl ViolationModel for Constant {
        fn input_dim(&self) -> usize {
            2
        }
        fn violation(&self, _: &[f64]) -> f64 {
            self.0
        }
    }

    /// Predicts violation only in the half-plane `u1 < −2`.
    struct HalfPlane;

    impl ViolationModel for HalfPlane {
        fn input_dim(&self) -> usize {
            2
        }
        fn violation(&self, u: &[f64]) -> f64 {
            if u[0] < -2.0 {
                0.5
            } else {
                0.0
            }
        }
    }

    const T_STAR: f64 = -4.453771;
    const J_STAR: f64 = -5.232758;

    fn cfg(batch: usize, iterations: usize) -> ExplorationConfig {
        ExplorationConfig {
            batch_size: batch,
            iterations,
            ..Default::default()
        }
    }

    #[test]
    fn zero_map_finds_unconstrained_minimum() {
        let p = ncvx_2d();
        let r = explore_optimizer(&p, &Constant(0.0), &cfg(50, 100), 1).unwrap();
        assert!(r.feasible);
        assert!((r.cost - J_STAR).abs() < 0.05, "cost {}", r.cost);
        assert!(r.decision.iter().all(|x| (x - T_STAR).abs() < 0.15), "{:?}", r.decision);
        assert!(r.trajectory_is_monotone());
        assert_eq!(r.trajectory.len(), 101);
        assert_eq!(r.evaluations.map_queries, 1 + 5000);
        assert_eq!(r.evaluations.constraint, 0);
    }

    #[test]
    fn all_infeasible_keeps_initial_point() {
        let p = ncvx_2d();
        let c = cfg(10, 20);
        let r = explore_optimizer(&p, &Constant(1.0), &c, 2).unwrap();
        assert!(!r.feasible);
        let first = p.domain().sample(&mut seeds::rng(seeds::derive(2, &[tag::SEARCH])));
        assert_eq!(r.decision, first);
        assert!(r.trajectory.iter().all(|t| t.cost.is_none() && t.decision == first));
        assert_eq!(r.cost, p.cost(&first));
    }

    #[test]
    fn incumbent_respects_map_threshold() {
        let p = ncvx_2d();
        let r = explore_optimizer(&p, &HalfPlane, &cfg(50, 100), 3).unwrap();
        assert!(r.decision[0] >= -2.0);
        assert!(r.decision[1] < -4.0);
        assert!(r.trajectory.iter().all(|t| t.decision[0] >= -2.0));
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = ncvx_2d();
        let a = explore_optimizer(&p, &HalfPlane, &cfg(20, 30), 4).unwrap();
        let b = explore_optimizer(&p, &HalfPlane, &cfg(20, 30), 4).unwrap();
        assert_eq!(a, b);
        let c = explore_optimizer(&p, &HalfPlane, &cfg(20, 30), 5).unwrap();
        assert_ne!(a.decision, c.decision);
    }

    #[test]
    fn config_checks() {
        let p = ncvx_2d();
        let mut c = cfg(10, 5);
        c.alpha_margin = 0.05;
        assert!(explore_optimizer(&p, &Constant(0.0), &c, 0).is_err());
        c.alpha_margin = 0.0;
        assert!(explore_optimizer(&p, &Constant(0.0), &c, 0).is_ok());
        c.batch_size = 0;
        assert!(explore_optimizer(&p, &Constant(0.0), &c, 0).is_err());

        struct ThreeD;
        impl ViolationModel for ThreeD {
            fn input_dim(&self) -> usize {
                3
            }
            fn violation(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        assert!(explore_optimizer(&p, &ThreeD, &cfg(10, 5), 0).is_err());
    }

    #[test]
    fn literal_reinit_redraws_incumbent() {
        let p = ncvx_2d();
        let mut c = cfg(5, 40);
        c.reinit_on_empty = true;
        c.search.global_restart_probability = 0.0;
        // Nothing survives after the first iteration, so every step re-initializes.
        struct FirstOnly(std::cell::Cell<usize>);
        impl ViolationModel for FirstOnly {
            fn input_dim(&self) -> usize {
                2
            }
            fn violation(&self, _: &[f64]) -> f64 {
                let n = self.0.get();
                self.0.set(n + 1);
                if n % 7 == 0 { 0.0 } else { 1.0 }
            }
        }
        let r = explore_optimizer(&p, &FirstOnly(Default::default()), &c, 6).unwrap();
        let distinct: std::collections::BTreeSet<String> =
            r.trajectory.iter().map(|t| format!("{:?}", t.decision)).collect();
        assert!(distinct.len() > 2);
    }
}
