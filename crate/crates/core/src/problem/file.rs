//! JSON problem files.
//!
//! ```json
//! {
//!   "name": "shifted-quadratic",
//!   "domain": { "lower": [-1, -1], "upper": [1, 1] },
//!   "alpha": 0.1,
//!   "disturbance": { "kind": "normal", "mean": 0.0, "std": 1.0, "dim": 1 },
//!   "objective": { "builtin": "ncvx-2d-cost" },
//!   "constraint": { "expr": { "op": "sub", "lhs": { "op": "u", "index": 0 }, "rhs": { "op": "delta", "index": 0 } } }
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::{benchmark, BoxDomain, Constraint, Disturbance, Objective, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionSpec {
    Builtin(String),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub domain: BoxDomain,
    pub alpha: f64,
    pub disturbance: Disturbance,
    pub objective: FunctionSpec,
    pub constraint: FunctionSpec,
}

fn default_name() -> String {
    "custom".to_owned()
}

const COST_BUILTINS: &[&str] = &["ncvx-2d-cost"];
const CONSTRAINT_BUILTINS: &[&str] = &["ncvx-2d-constraint"];

impl ProblemFile {
    pub fn into_spec(self) -> Result<ProblemSpec> {
        let n_u = self.domain.dim();
        let n_delta = self.disturbance.dim();
        let objective: Objective = match self.objective {
            FunctionSpec::Builtin(name) => match name.as_str() {
                "ncvx-2d-cost" => Arc::new(benchmark::ncvx_2d_cost),
                _ => {
                    return Err(Error::invalid(format!(
                        "unknown builtin objective {name:?} (known: {COST_BUILTINS:?})"
                    )))
                }
            },
            FunctionSpec::Expr(e) => {
                e.validate(n_u, None)?;
                Arc::new(move |u: &[f64]| e.eval(u, &[]))
            }
        };
        let constraint: Constraint = match self.constraint {
            FunctionSpec::Builtin(name) => match name.as_str() {
                "ncvx-2d-constraint" => {
                    if n_delta != 1 {
                        return Err(Error::invalid(
                            "ncvx-2d-constraint needs a scalar disturbance (dim 1)",
                        ));
                    }
                    Arc::new(benchmark::ncvx_2d_constraint)
                }
                _ => {
                    return Err(Error::invalid(format!(
                        "unknown builtin constraint {name:?} (known: {CONSTRAINT_BUILTINS:?})"
                    )))
                }
            },
            FunctionSpec::Expr(e) => {
                e.validate(n_u, Some(n_delta))?;
                Arc::new(move |u: &[f64], d: &[f64]| e.eval(u, d))
            }
        };
        ProblemSpec::new(
            self.name,
            self.domain,
            self.disturbance,
            self.alpha,
            objective,
            constraint,
        )
    }
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| Error::json(format!("problem file {}", path.display()), e))?;
    file.into_spec()
}

/// Resolves a builtin instance name, falling back to a JSON file path.
pub fn resolve_problem(reference: &str) -> Result<ProblemSpec> {
    if let Some(spec) = benchmark::builtin(reference) {
        return Ok(spec);
    }
    let path = Path::new(reference);
    if path.exists() {
        load_problem(path)
    } else {
        Err(Error::invalid(format!(
            "problem {reference:?} is neither a builtin ({:?}) nor an existing file",
            benchmark::BUILTIN_NAMES
        )))
    }
}
