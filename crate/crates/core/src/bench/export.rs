use std::path::Path;

use super::{BenchmarkReport, MapArtifacts};
use crate::csvfmt::{sig9, writer};
use crate::error::{Error, Result};

pub fn summary_header() -> [&'static str; 5] {
    ["method", "mean_cost", "sd_cost", "mean_viol", "sd_viol"]
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes the benchmark directory:
///
/// ```text
/// report.json            full report
/// summary.csv            method,mean_cost,sd_cost,mean_viol,sd_viol
/// trajectories.csv       method,iteration,mean_cost,runs
/// scatter.csv            method,run,seed,u1..un,cost,violation
/// map_accuracy.csv       n_delta,mae,boundary_deviation
/// grids/                 reference.csv, map_n<k>.csv   (u1,u2,v)
/// boundaries/            reference.csv, map_n<k>.csv   (u1,u2; blank line between polylines)
/// runs/<method>/<seed>.json
/// ```
///
/// Tables without data are written with their header only.
pub fn export_report(report: &BenchmarkReport, artifacts: Option<&MapArtifacts>, dir: &Path) -> Result<()> {
    mkdir(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::json("serializing report", e))?;
    let report_path = dir.join("report.json");
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;

    let comparison = report.comparison.as_ref();
    let path = dir.join("summary.csv");
    let mut w = writer(&path)?;
    w.write_record(summary_header())?;
    for m in comparison.iter().flat_map(|c| &c.methods) {
        let s = &m.summary;
        w.write_record([
            m.method.name().to_owned(),
            opt(s.mean_cost),
            opt(s.sd_cost),
            opt(s.mean_violation),
            opt(s.sd_violation),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("trajectories.csv");
    let mut w = writer(&path)?;
    w.write_record(["method", "iteration", "mean_cost", "runs"])?;
    for m in comparison.iter().flat_map(|c| &c.methods) {
        for t in &m.mean_trajectory {
            w.write_record([
                m.method.name().to_owned(),
                t.iteration.to_string(),
                sig9(t.mean_cost),
                t.runs.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let dim = comparison
        .and_then(|c| c.methods.iter().flat_map(|m| &m.runs).find_map(|r| r.result.as_ref()))
        .map_or(2, |r| r.decision.len());
    let path = dir.join("scatter.csv");
    let mut w = writer(&path)?;
    let mut header: Vec<String> = ["method", "run", "seed"].map(String::from).to_vec();
    header.extend((1..=dim).map(|i| format!("u{i}")));
    header.extend(["cost", "violation"].map(String::from));
    w.write_record(&header)?;
    for m in comparison.iter().flat_map(|c| &c.methods) {
        for r in &m.runs {
            let Some(res) = &r.result else { continue };
            let mut row = vec![m.method.name().to_owned(), r.run.to_string(), r.seed.to_string()];
            row.extend(res.decision.iter().map(|v| sig9(*v)));
            row.push(sig9(res.cost));
            row.push(opt(res.oracle_violation));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("map_accuracy.csv");
    let mut w = writer(&path)?;
    w.write_record(["n_delta", "mae", "boundary_deviation"])?;
    for row in report.map_study.iter().flat_map(|s| &s.rows) {
        w.write_record([row.n_delta.to_string(), sig9(row.mae), opt(row.boundary_deviation)])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    if let Some(art) = artifacts {
        let grids = dir.join("grids");
        let bounds = dir.join("boundaries");
        mkdir(&grids)?;
        mkdir(&bounds)?;
        art.reference.field.write_csv(&grids.join("reference.csv"))?;
        art.reference_boundary.write_csv(&bounds.join("reference.csv"))?;
        for (n, field, boundary) in &art.maps {
            field.write_csv(&grids.join(format!("map_n{n}.csv")))?;
            boundary.write_csv(&bounds.join(format!("map_n{n}.csv")))?;
        }
    }

    if let Some(c) = comparison {
        for m in &c.methods {
            let sub = dir.join("runs").join(m.method.name());
            mkdir(&sub)?;
            for r in &m.runs {
                let path = sub.join(format!("{}.json", r.seed));
                let text = serde_json::to_string_pretty(r).map_err(|e| Error::json("serializing run", e))?;
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}
