//! `ccp-elm`: train violation maps, solve chance-constrained problems and run
//! the benchmark harness.
//!
//! Exit codes: 0 success, 1 numerical or runtime failure, 2 usage error,
//! 3 infeasible problem.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use ccp_elm::bench::{export_report, run_experiment, ExperimentConfig};
use ccp_elm::elm::Activation;
use ccp_elm::optimize::{
    explore_optimizer, parallel_randomized, scenario_solve, Method, SolveResult,
};
use ccp_elm::problem::{resolve_problem, ProblemSpec};
use ccp_elm::seeds::{self, tag};
use ccp_elm::vmap::{holdout_mae, train_violation_map, ViolationMap};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(name = "ccp-elm", version, about = "Chance-constrained optimization with learned violation maps")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a violation map and save it as JSON.
    TrainMap(TrainMapArgs),
    /// Solve a problem with one of the three methods.
    Solve(SolveArgs),
    /// Run the map study and solver comparison and write a report directory.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct MapArgs {
    /// Decision anchors.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n_u: Option<u64>,
    /// Disturbance samples streamed through the map.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n_delta: Option<u64>,
    /// Hidden nodes.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    hidden: Option<u64>,
    #[arg(long)]
    activation: Option<Activation>,
    /// Ridge term of the recursive least-squares update.
    #[arg(long)]
    ridge: Option<f64>,
}

#[derive(Args)]
struct TrainMapArgs {
    /// Builtin problem name or path to a problem JSON file.
    #[arg(long)]
    problem: String,
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the map.
    #[arg(long, default_value = "map.json")]
    out: PathBuf,
    /// Uniform holdout points used for the reported MAE.
    #[arg(long, default_value_t = 100)]
    holdout_points: usize,
    /// Monte-Carlo samples per holdout point.
    #[arg(long, default_value_t = 10_000)]
    holdout_samples: usize,
    /// Experiment config JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    Parallel,
    Scenario,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Proposed => Method::Proposed,
            MethodArg::Parallel => Method::Parallel,
            MethodArg::Scenario => Method::Scenario,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Builtin problem name or path to a problem JSON file.
    #[arg(long)]
    problem: Option<String>,
    /// Trained map for the proposed method; trained inline when absent.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    map_args: MapArgs,
    /// Target violation level (overrides the problem's).
    #[arg(long)]
    alpha: Option<f64>,
    /// Safety margin: survivors need predicted violation <= alpha - alpha_eps.
    #[arg(long)]
    alpha_eps: Option<f64>,
    /// Candidates per iteration (proposed: batch size, parallel: decisions).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: Option<u64>,
    /// Fresh disturbances per parallel-method iteration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    parallel_n_delta: Option<u64>,
    /// Scenario count for the scenario method.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    scenarios: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: Option<u64>,
    /// Cap on scenario-method constraint evaluations.
    #[arg(long)]
    max_evaluations: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    oracle_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Seeded runs per method.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    runs: Option<u64>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Disturbance counts for the map study, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    n_delta: Option<Vec<u64>>,
    /// Anchors per map.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n_u: Option<u64>,
    /// Reference lattice points per axis.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    reference_grid: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reference_samples: Option<u64>,
    /// Disturbances per proposed-method map in the comparison.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    solve_n_delta: Option<u64>,
    #[arg(long)]
    skip_map_study: bool,
    #[arg(long)]
    skip_comparison: bool,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn apply_map_args(cfg: &mut ExperimentConfig, a: &MapArgs) {
    if let Some(v) = a.n_u {
        cfg.map.n_u = v as usize;
    }
    if let Some(v) = a.n_delta {
        cfg.comparison.n_delta = v as usize;
    }
    if let Some(v) = a.hidden {
        cfg.map.elm.hidden_count = v as usize;
    }
    if let Some(v) = a.activation {
        cfg.map.elm.activation = v;
    }
    if let Some(v) = a.ridge {
        cfg.map.elm.ridge = v;
    }
}

fn train_map(spec: &ProblemSpec, cfg: &ExperimentConfig, seed: u64) -> Result<ViolationMap> {
    let mut rng = seeds::rng(seeds::derive(seed, &[tag::MAP]));
    let map = train_violation_map(spec, cfg.map.n_u, cfg.comparison.n_delta, &cfg.map.elm, &mut rng)?;
    Ok(map.with_metadata(json!({
        "seed": seed,
        "n_u": cfg.map.n_u,
        "n_delta": cfg.comparison.n_delta,
        "elm": cfg.map.elm,
    })))
}

fn cmd_train_map(args: TrainMapArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_map_args(&mut cfg, &args.map);
    let spec = resolve_problem(&args.problem)?;
    let map = train_map(&spec, &cfg, args.seed)?;
    map.save(&args.out)?;
    let mae = holdout_mae(
        &spec,
        &map,
        args.holdout_points,
        args.holdout_samples,
        seeds::derive(args.seed, &[tag::HOLDOUT]),
    )?;
    println!("problem: {}", spec.name());
    println!("n_u: {}", cfg.map.n_u);
    println!("n_delta: {}", map.n_delta_seen());
    println!("holdout_mae: {mae:.6}");
    println!("map: {}", args.out.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    apply_map_args(&mut cfg, &args.map_args);
    let problem = args.problem.clone().unwrap_or_else(|| cfg.problem.clone());
    let mut spec = resolve_problem(&problem)?;
    if let Some(a) = args.alpha {
        spec = spec.with_alpha(a)?;
    }
    let c = &mut cfg.comparison;
    c.exploration.alpha = spec.alpha();
    if let Some(v) = args.alpha_eps {
        c.exploration.alpha_margin = v;
    }
    if let Some(v) = args.batch_size {
        c.exploration.batch_size = v as usize;
        c.parallel.candidates = v as usize;
    }
    if let Some(v) = args.iterations {
        c.exploration.iterations = v as usize;
        c.parallel.iterations = v as usize;
    }
    if let Some(v) = args.parallel_n_delta {
        c.parallel.n_delta = v as usize;
    }
    if let Some(v) = args.scenarios {
        c.scenario.n_scenarios = v as usize;
    }
    if let Some(v) = args.restarts {
        c.scenario.restarts = v as usize;
    }
    if args.max_evaluations.is_some() {
        c.scenario.max_evaluations = args.max_evaluations;
    }
    if let Some(v) = args.oracle_samples {
        c.oracle_samples = v as usize;
    }
    cfg.validate()?;
    let c = &cfg.comparison;
    let method = Method::from(args.method);
    let (result, solver_cfg, map_info) = match method {
        Method::Proposed => {
            let map = match &args.map {
                Some(path) => ViolationMap::load(path)?,
                None => train_map(&spec, &cfg, args.seed)?,
            };
            let mut r = explore_optimizer(&spec, &map, &c.exploration, args.seed)?;
            r.evaluations.constraint += map.constraint_evaluations();
            let info = json!({
                "path": args.map.as_ref().map(|p| p.display().to_string()),
                "n_u": map.anchors().len(),
                "n_delta": map.n_delta_seen(),
                "metadata": map.metadata(),
            });
            (r, json!(c.exploration), info)
        }
        Method::Parallel => (parallel_randomized(&spec, &c.parallel, args.seed)?, json!(c.parallel), json!(null)),
        Method::Scenario => {
            (scenario_solve(&spec, &c.scenario, args.seed)?, json!(c.scenario), json!(null))
        }
    };
    let mut result: SolveResult = result.with_oracle(&spec, c.oracle_samples)?;
    result.config = json!({
        "problem": spec.name(),
        "alpha": spec.alpha(),
        "seed": args.seed,
        "solver": solver_cfg,
        "map": map_info,
    });
    println!("decision: {:?}", result.decision);
    println!("cost: {:.6}", result.cost);
    println!("feasible: {}", result.feasible);
    if let Some(v) = result.oracle_violation {
        println!("oracle_violation: {v:.6}");
    }
    let text = serde_json::to_string_pretty(&result)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("result: {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.problem {
        cfg.problem = p;
    }
    if let Some(v) = args.runs {
        cfg.run_count = v as usize;
    }
    if let Some(v) = args.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v as usize;
    }
    if let Some(v) = args.n_delta {
        cfg.map.n_delta = v.into_iter().map(|x| x as usize).collect();
    }
    if let Some(v) = args.n_u {
        cfg.map.n_u = v as usize;
    }
    if let Some(v) = args.reference_grid {
        let dim = cfg.map.reference_per_axis.len().max(1);
        cfg.map.reference_per_axis = vec![v as usize; dim];
    }
    if let Some(v) = args.reference_samples {
        cfg.map.reference_samples = v as usize;
    }
    if let Some(v) = args.solve_n_delta {
        cfg.comparison.n_delta = v as usize;
    }
    cfg.run_map_study &= !args.skip_map_study;
    cfg.run_comparison &= !args.skip_comparison;
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    let (report, artifacts) = pool.install(|| run_experiment(&cfg))?;
    export_report(&report, artifacts.as_ref(), &args.out)?;
    if let Some(c) = &report.comparison {
        for m in &c.methods {
            let s = &m.summary;
            println!(
                "{:<9} runs={} failed={} mean_cost={} mean_viol={} sd_viol={}",
                m.method.name(),
                s.successes,
                s.failures,
                fmt_opt(s.mean_cost),
                fmt_opt(s.mean_violation),
                fmt_opt(s.sd_violation),
            );
        }
    }
    if let Some(s) = &report.map_study {
        for r in &s.rows {
            println!(
                "map n_delta={} mae={:.6} boundary_deviation={}",
                r.n_delta,
                r.mae,
                fmt_opt(r.boundary_deviation)
            );
        }
    }
    info!("report written to {}", args.out.display());
    println!("report: {}", args.out.join("report.json").display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ccp_elm::Error>() {
        Some(ccp_elm::Error::InvalidArgument(_)) | Some(ccp_elm::Error::DimensionMismatch { .. }) => 2,
        Some(ccp_elm::Error::Infeasible(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let outcome = match cli.command {
        Command::TrainMap(a) => cmd_train_map(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
