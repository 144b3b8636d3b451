//! Seeded experiment harness: map-accuracy study, three-way solver
//! comparison on matched constraint-evaluation budgets, and report export.

mod export;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{
    explore_optimizer, parallel_randomized, scenario_solve, ExplorationConfig, Method, ParallelConfig,
    RandomSearchConfig, ScenarioConfig, SolveResult,
};
use crate::problem::{resolve_problem, ProblemSpec, NCVX_2D};
use crate::seeds::{self, tag};
use crate::vmap::{
    build_reference_grid, chamfer_deviation, extract_boundary, mean_absolute_error, probe_map,
    train_violation_map, train_violation_map_checkpoints, Boundary, ElmConfig, LatticeField, ReferenceGrid,
};

pub use export::{export_report, summary_header};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapStudyConfig {
    /// Decision anchors per map.
    pub n_u: usize,
    /// Disturbance counts to compare; maps are snapshots of one training stream.
    pub n_delta: Vec<usize>,
    pub elm: ElmConfig,
    pub reference_per_axis: Vec<usize>,
    pub reference_samples: usize,
    /// Level of the exported boundaries; `None` uses the problem's `alpha`.
    pub boundary_level: Option<f64>,
}

impl Default for MapStudyConfig {
    fn default() -> Self {
        Self {
            n_u: 400,
            n_delta: vec![200, 1000, 2000],
            elm: ElmConfig::default(),
            reference_per_axis: vec![56, 56],
            reference_samples: 10_000,
            boundary_level: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonConfig {
    pub methods: Vec<Method>,
    /// Disturbances used to train each proposed-method map (anchors and
    /// network settings come from the map study section).
    pub n_delta: usize,
    pub exploration: ExplorationConfig,
    pub parallel: ParallelConfig,
    /// `max_evaluations: None` is replaced by the matched budget.
    pub scenario: ScenarioConfig,
    pub oracle_samples: usize,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            n_delta: 2000,
            exploration: ExplorationConfig::default(),
            parallel: ParallelConfig {
                candidates: 20,
                n_delta: 2000,
                iterations: 20,
                ..ParallelConfig::default()
            },
            scenario: ScenarioConfig {
                search: RandomSearchConfig {
                    max_iterations: 100_000,
                    init_attempts: 100_000,
                    ..RandomSearchConfig::default()
                },
                ..ScenarioConfig::default()
            },
            oracle_samples: crate::optimize::ORACLE_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Builtin problem name or path to a problem JSON file.
    pub problem: String,
    pub base_seed: u64,
    pub run_count: usize,
    pub workers: usize,
    pub run_map_study: bool,
    pub run_comparison: bool,
    pub map: MapStudyConfig,
    pub comparison: ComparisonConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: NCVX_2D.to_owned(),
            base_seed: 0,
            run_count: 20,
            workers: 1,
            run_map_study: true,
            run_comparison: true,
            map: MapStudyConfig::default(),
            comparison: ComparisonConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(format!("experiment config {}", path.display()), e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.run_count == 0 {
            return Err(Error::invalid("run_count must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if self.map.n_delta.is_empty() {
            return Err(Error::invalid("map study needs at least one n_delta"));
        }
        if self.map.n_u == 0 || self.map.reference_samples == 0 {
            return Err(Error::invalid("n_u and reference_samples must be at least 1"));
        }
        if self.comparison.methods.is_empty() {
            return Err(Error::invalid("comparison needs at least one method"));
        }
        if self.comparison.n_delta == 0 || self.comparison.oracle_samples == 0 {
            return Err(Error::invalid("comparison n_delta and oracle_samples must be at least 1"));
        }
        self.comparison.exploration.validate()?;
        self.comparison.parallel.validate()?;
        self.comparison.scenario.validate()
    }

    /// Constraint evaluations spent training one proposed-method map.
    pub fn matched_budget(&self) -> u64 {
        (self.map.n_u * self.comparison.n_delta) as u64
    }

    /// Seed of run `run` of `method`; independent of `run_count`.
    pub fn run_seed(&self, method: Method, run: usize) -> u64 {
        seeds::derive(self.base_seed, &[method.tag(), run as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapAccuracy {
    pub n_delta: usize,
    pub mae: f64,
    /// One-sided Chamfer deviation of the map boundary from the reference
    /// boundary; `None` when the map has no boundary but the reference does.
    pub boundary_deviation: Option<f64>,
    pub constraint_evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapStudy {
    pub reference_seed: u64,
    pub boundary_level: f64,
    pub reference_boundary_points: usize,
    pub rows: Vec<MapAccuracy>,
}

/// Grids and boundaries produced by the map study, kept out of the JSON report.
#[derive(Clone, Debug)]
pub struct MapArtifacts {
    pub reference: ReferenceGrid,
    pub reference_boundary: Boundary,
    pub maps: Vec<(usize, LatticeField, Boundary)>,
}

pub fn run_map_study(spec: &ProblemSpec, cfg: &ExperimentConfig) -> Result<(MapStudy, MapArtifacts)> {
    let m = &cfg.map;
    let level = m.boundary_level.unwrap_or(spec.alpha());
    let reference_seed = seeds::derive(cfg.base_seed, &[tag::REFERENCE]);
    let reference = build_reference_grid(spec, &m.reference_per_axis, m.reference_samples, reference_seed)?;
    let reference_boundary = extract_boundary(&reference.field, level)?;
    let mut checkpoints = m.n_delta.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut rng = seeds::rng(seeds::derive(cfg.base_seed, &[tag::MAP]));
    let maps = train_violation_map_checkpoints(spec, m.n_u, &checkpoints, &m.elm, &mut rng)?;
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for map in &maps {
        let field = probe_map(map, spec.domain(), &m.reference_per_axis)?;
        let boundary = extract_boundary(&field, level)?;
        let row = MapAccuracy {
            n_delta: map.n_delta_seen(),
            mae: mean_absolute_error(&field, &reference.field)?,
            boundary_deviation: chamfer_deviation(&reference_boundary, &boundary),
            constraint_evaluations: map.constraint_evaluations(),
        };
        info!("map n_delta={} mae={:.5} deviation={:?}", row.n_delta, row.mae, row.boundary_deviation);
        rows.push(row);
        fields.push((map.n_delta_seen(), field, boundary));
    }
    Ok((
        MapStudy {
            reference_seed,
            boundary_level: level,
            reference_boundary_points: reference_boundary.points.len(),
            rows,
        },
        MapArtifacts {
            reference,
            reference_boundary,
            maps: fields,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    pub result: Option<SolveResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub successes: usize,
    pub failures: usize,
    pub mean_cost: Option<f64>,
    pub sd_cost: Option<f64>,
    pub mean_violation: Option<f64>,
    pub sd_violation: Option<f64>,
    pub mean_constraint_evaluations: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMean {
    pub iteration: usize,
    pub mean_cost: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRuns {
    pub method: Method,
    pub runs: Vec<RunRecord>,
    pub summary: MethodSummary,
    pub mean_trajectory: Vec<TrajectoryMean>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub matched_budget: u64,
    pub methods: Vec<MethodRuns>,
}

impl Comparison {
    pub fn method(&self, m: Method) -> Option<&MethodRuns> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Mean and sample standard deviation (`n − 1`; zero for a single value).
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(sd))
}

pub fn summarize(runs: &[RunRecord]) -> MethodSummary {
    let ok: Vec<&SolveResult> = runs.iter().filter_map(|r| r.result.as_ref()).collect();
    let costs: Vec<f64> = ok.iter().map(|r| r.cost).collect();
    let viols: Vec<f64> = ok.iter().filter_map(|r| r.oracle_violation).collect();
    let evals: Vec<f64> = ok.iter().map(|r| r.evaluations.constraint as f64).collect();
    let (mean_cost, sd_cost) = mean_sd(&costs);
    let (mean_violation, sd_violation) = mean_sd(&viols);
    MethodSummary {
        successes: ok.len(),
        failures: runs.len() - ok.len(),
        mean_cost,
        sd_cost,
        mean_violation,
        sd_violation,
        mean_constraint_evaluations: mean_sd(&evals).0,
    }
}

/// Averages incumbent cost over runs at every iteration where some run's
/// trajectory changes, treating each trajectory as a step function. Runs
/// without a verified incumbent yet are left out of that iteration's mean.
pub fn mean_trajectory(runs: &[RunRecord]) -> Vec<TrajectoryMean> {
    let trajs: Vec<_> = runs.iter().filter_map(|r| r.result.as_ref()).map(|r| &r.trajectory).collect();
    let mut iterations: Vec<usize> = trajs.iter().flat_map(|t| t.iter().map(|p| p.iteration)).collect();
    iterations.sort_unstable();
    iterations.dedup();
    let mut cursor = vec![0usize; trajs.len()];
    let mut out = Vec::with_capacity(iterations.len());
    for k in iterations {
        let mut sum = 0.0;
        let mut count = 0;
        for (t, c) in trajs.iter().zip(cursor.iter_mut()) {
            while *c + 1 < t.len() && t[*c + 1].iteration <= k {
                *c += 1;
            }
            if let Some(cost) = t.get(*c).filter(|p| p.iteration <= k).and_then(|p| p.cost) {
                sum += cost;
                count += 1;
            }
        }
        if count > 0 {
            out.push(TrajectoryMean {
                iteration: k,
                mean_cost: sum / count as f64,
                runs: count,
            });
        }
    }
    out
}

/// One seeded run of `method` under the harness configuration, including the
/// oracle referee.
pub fn solve_run(spec: &ProblemSpec, cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<SolveResult> {
    let c = &cfg.comparison;
    let result = match method {
        Method::Proposed => {
            let mut rng = seeds::rng(seeds::derive(seed, &[tag::MAP]));
            let map = train_violation_map(spec, cfg.map.n_u, c.n_delta, &cfg.map.elm, &mut rng)?;
            let explore = ExplorationConfig {
                alpha: spec.alpha(),
                ..c.exploration.clone()
            };
            let mut r = explore_optimizer(spec, &map, &explore, seed)?;
            r.evaluations.constraint += map.constraint_evaluations();
            r
        }
        Method::Parallel => parallel_randomized(spec, &c.parallel, seed)?,
        Method::Scenario => {
            let scenario = ScenarioConfig {
                max_evaluations: c.scenario.max_evaluations.or(Some(cfg.matched_budget())),
                ..c.scenario.clone()
            };
            scenario_solve(spec, &scenario, seed)?
        }
    };
    result.with_oracle(spec, c.oracle_samples)
}

pub fn run_solver_comparison(spec: &ProblemSpec, cfg: &ExperimentConfig) -> Result<Comparison> {
    let budget = cfg.matched_budget();
    let parallel_budget = cfg.comparison.parallel.constraint_budget();
    if (parallel_budget as f64 - budget as f64).abs() > 0.05 * budget as f64 {
        warn!("parallel baseline budget {parallel_budget} differs from matched budget {budget} by more than 5%");
    }
    let jobs: Vec<(Method, usize)> = cfg
        .comparison
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.run_count).map(move |j| (m, j)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(method, run)| {
            let seed = cfg.run_seed(method, run);
            let outcome = solve_run(spec, cfg, method, seed);
            if let Err(e) = &outcome {
                warn!("{method} run {run} failed: {e}");
            }
            RunRecord {
                method,
                run,
                seed,
                error: outcome.as_ref().err().map(|e| e.to_string()),
                result: outcome.ok(),
            }
        })
        .collect();
    let mut methods = Vec::new();
    for &m in &cfg.comparison.methods {
        let runs: Vec<RunRecord> = records.iter().filter(|r| r.method == m).cloned().collect();
        methods.push(MethodRuns {
            method: m,
            summary: summarize(&runs),
            mean_trajectory: mean_trajectory(&runs),
            runs,
        });
    }
    Ok(Comparison {
        matched_budget: budget,
        methods,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub problem: String,
    pub config: ExperimentConfig,
    pub map_study: Option<MapStudy>,
    pub comparison: Option<Comparison>,
    /// Wall-clock seconds per phase. Not covered by the determinism contract.
    pub timing: BTreeMap<String, f64>,
}

impl BenchmarkReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(format!("report {}", path.display()), e))
    }
}

/// Resolves the problem and runs the enabled phases.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(BenchmarkReport, Option<MapArtifacts>)> {
    cfg.validate()?;
    let spec = resolve_problem(&cfg.problem)?;
    let mut timing = BTreeMap::new();
    let mut map_study = None;
    let mut artifacts = None;
    if cfg.run_map_study {
        let t = Instant::now();
        let (study, art) = run_map_study(&spec, cfg)?;
        timing.insert("map_study".to_owned(), t.elapsed().as_secs_f64());
        map_study = Some(study);
        artifacts = Some(art);
    }
    let mut comparison = None;
    if cfg.run_comparison {
        let t = Instant::now();
        comparison = Some(run_solver_comparison(&spec, cfg)?);
        timing.insert("comparison".to_owned(), t.elapsed().as_secs_f64());
    }
    Ok((
        BenchmarkReport {
            schema_version: REPORT_SCHEMA_VERSION,
            problem: spec.name().to_owned(),
            config: cfg.clone(),
            map_study,
            comparison,
            timing,
        },
        artifacts,
    ))
}
