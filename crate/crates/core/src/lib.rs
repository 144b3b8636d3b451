//! Chance-constrained optimization with learned violation-probability maps.
//!
//! A chance-constrained program asks for
//!
//! ```text
//! min_{u ∈ U} J(u)   s.t.   Pr{ h(u, δ) ≤ 0 } ≥ 1 − α
//! ```
//!
//! where `δ` is a random disturbance. The feasible set of such a program is a
//! union over all probability-(1 − α) disturbance subsets of the
//! intersections of the per-disturbance feasible sets, which has no usable
//! closed form. This crate instead learns the map `u ↦ Pr{h(u, δ) > 0}` with
//! a single-hidden-layer network whose output weights are fitted by
//! (sequential) extreme learning machine, and then searches the decision box
//! with a randomized optimizer that discards candidates whose predicted
//! violation probability exceeds `α − α_ε`.
//!
//! Modules:
//!
//! - [`problem`]: problem definitions, the non-convex 2-D benchmark, and samplers.
//! - [`elm`]: single-hidden-layer networks, batch ELM and recursive least squares.
//! - [`vmap`]: Monte-Carlo violation estimates, the learned map, reference grids
//!   and level-set extraction.
//! - [`optimize`]: randomized search, map-guided exploration, the parallel
//!   randomized baseline and the scenario approach.
//! - [`bench`]: the seeded experiment harness and report export.

pub mod bench;
pub mod elm;
mod csvfmt;
mod error;
pub mod optimize;
pub mod problem;
pub mod seeds;
pub mod vmap;

pub use error::{Error, Result};
