//! The non-convex two-dimensional benchmark instance.
//!
//! ```text
//! J(u)    = Σ_i [ (u_i + 0.5)^4 − 30 u_i^2 − 20 u_i ] / 100
//! h(u, δ) = Σ_i [ 0.075 (u_i − 2δ)^4 − 3.5 (u_i − 2δ)^2 ] − (8 − 0.1 δ)^2
//! ```
//!
//! on `U = [−6, 5]^2` with scalar `δ ~ N(0, 1)` and `α = 0.05`.

use std::sync::Arc;

use super::{BoxDomain, Disturbance, ProblemSpec};

/// CLI name of the benchmark instance.
pub const NCVX_2D: &str = "paper-ncvx-2d";

pub const BUILTIN_NAMES: &[&str] = &[NCVX_2D];

pub fn ncvx_2d_cost(u: &[f64]) -> f64 {
    u.iter()
        .map(|&x| (x + 0.5).powi(4) - 30.0 * x * x - 20.0 * x)
        .sum::<f64>()
        / 100.0
}

pub fn ncvx_2d_constraint(u: &[f64], delta: &[f64]) -> f64 {
    let d = delta[0];
    let quartic: f64 = u
        .iter()
        .map(|&x| {
            let s = x - 2.0 * d;
            0.075 * s.powi(4) - 3.5 * s * s
        })
        .sum();
    quartic - (8.0 - 0.1 * d).powi(2)
}

pub fn ncvx_2d() -> ProblemSpec {
    ProblemSpec::new(
        NCVX_2D,
        BoxDomain::cube(2, -6.0, 5.0).expect("static box"),
        Disturbance::standard_normal(1),
        0.05,
        Arc::new(ncvx_2d_cost),
        Arc::new(ncvx_2d_constraint),
    )
    .expect("static benchmark definition")
}

pub fn builtin(name: &str) -> Option<ProblemSpec> {
    match name {
        NCVX_2D => Some(ncvx_2d()),
        _ => None,
    }
}
