//! Violation-probability surfaces.
//!
//! `V(u) = Pr{h(u, δ) > 0}` is estimated two ways: directly by Monte-Carlo
//! counting over disturbance draws, and by a network trained with the
//! two-layer sampling scheme in [`train_violation_map`]. The network regresses
//! the raw `{0, 1}` violation indicators; since least squares on booleans
//! converges to their conditional mean, the fitted surface approaches `V(u)`.

mod contour;
mod grid;

use std::path::Path;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elm::{Activation, RlsState, SlfnModel, DEFAULT_RIDGE};
use crate::error::{check_dim, Error, Result};
use crate::problem::{sample_decision_uniform, BoxDomain, ProblemSpec};

pub use contour::{chamfer_deviation, extract_boundary, Boundary};
pub use grid::{build_reference_grid, mean_absolute_error, probe_map, LatticeField, ReferenceGrid};

/// `1` iff `h(u, δ) > 0`. A constraint value of exactly zero counts as satisfied.
pub fn indicator(spec: &ProblemSpec, u: &[f64], delta: &[f64]) -> Result<bool> {
    Ok(spec.evaluate_constraint(u, delta)? > 0.0)
}

/// Number of disturbance samples under which `u` violates the constraint.
pub fn violation_count<D: AsRef<[f64]>>(spec: &ProblemSpec, u: &[f64], deltas: &[D]) -> Result<usize> {
    check_dim("decision vector", spec.decision_dim(), u.len())?;
    let mut count = 0;
    for d in deltas {
        let d = d.as_ref();
        check_dim("disturbance vector", spec.disturbance_dim(), d.len())?;
        if spec.constraint(u, d) > 0.0 {
            count += 1;
        }
    }
    Ok(count)
}

/// Monte-Carlo estimate `V̂(u) = Σ B(u, δ_i) / N_s`.
pub fn empirical_violation<D: AsRef<[f64]>>(spec: &ProblemSpec, u: &[f64], deltas: &[D]) -> Result<f64> {
    if deltas.is_empty() {
        return Err(Error::invalid("violation estimate needs at least one disturbance sample"));
    }
    Ok(violation_count(spec, u, deltas)? as f64 / deltas.len() as f64)
}

/// Streams `samples` fresh disturbances from `rng` and returns `V̂(u)`.
pub fn monte_carlo_violation<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    u: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("violation estimate needs at least one disturbance sample"));
    }
    check_dim("decision vector", spec.decision_dim(), u.len())?;
    let mut delta = vec![0.0; spec.disturbance_dim()];
    let mut count = 0usize;
    for _ in 0..samples {
        spec.disturbance().sample_into(rng, &mut delta);
        if spec.constraint(u, &delta) > 0.0 {
            count += 1;
        }
    }
    Ok(count as f64 / samples as f64)
}

/// Anything that maps a decision to a violation probability in `[0, 1]`.
pub trait ViolationModel {
    fn input_dim(&self) -> usize;

    /// Violation probability of `u`; `u.len()` must equal [`Self::input_dim`].
    fn violation(&self, u: &[f64]) -> f64;
}

/// Hidden-layer settings for a violation map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElmConfig {
    pub hidden_count: usize,
    pub activation: Activation,
    pub ridge: f64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden_count: 50,
            activation: Activation::Sigmoid,
            ridge: DEFAULT_RIDGE,
        }
    }
}

pub const MAP_FORMAT: &str = "ccp-elm/violation-map";
pub const MAP_VERSION: u32 = 1;

/// A trained network specialised to clipped violation-probability queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MapDocument", try_from = "MapDocument")]
pub struct ViolationMap {
    model: SlfnModel,
    domain: BoxDomain,
    anchors: Vec<Vec<f64>>,
    n_delta_seen: usize,
    alpha_context: f64,
    problem: String,
    constraint_evaluations: u64,
    metadata: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub format: String,
    pub version: u32,
    pub problem: String,
    pub alpha_context: f64,
    pub n_delta_seen: usize,
    pub constraint_evaluations: u64,
    pub domain: BoxDomain,
    pub anchors: Vec<Vec<f64>>,
    pub model: SlfnModel,
    /// Free-form provenance (training settings, seed).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

impl From<ViolationMap> for MapDocument {
    fn from(m: ViolationMap) -> Self {
        MapDocument {
            format: MAP_FORMAT.to_owned(),
            version: MAP_VERSION,
            problem: m.problem,
            alpha_context: m.alpha_context,
            n_delta_seen: m.n_delta_seen,
            constraint_evaluations: m.constraint_evaluations,
            domain: m.domain,
            anchors: m.anchors,
            model: m.model,
            metadata: m.metadata,
        }
    }
}

impl TryFrom<MapDocument> for ViolationMap {
    type Error = Error;

    fn try_from(doc: MapDocument) -> Result<Self> {
        if doc.format != MAP_FORMAT || doc.version != MAP_VERSION {
            return Err(Error::invalid(format!(
                "unsupported map document {:?} v{} (expected {MAP_FORMAT:?} v{MAP_VERSION})",
                doc.format, doc.version
            )));
        }
        check_dim("map output", 1, doc.model.output_dim())?;
        check_dim("map input", doc.domain.dim(), doc.model.input_dim())?;
        if doc.anchors.iter().any(|a| !doc.domain.contains(a)) {
            return Err(Error::invalid("map anchors must lie inside the decision box"));
        }
        Ok(ViolationMap {
            model: doc.model,
            domain: doc.domain,
            anchors: doc.anchors,
            n_delta_seen: doc.n_delta_seen,
            alpha_context: doc.alpha_context,
            problem: doc.problem,
            constraint_evaluations: doc.constraint_evaluations,
            metadata: doc.metadata,
        })
    }
}

impl ViolationMap {
    /// Wraps an already-fitted single-output network.
    pub fn from_model(model: SlfnModel, spec: &ProblemSpec) -> Result<Self> {
        check_dim("map output", 1, model.output_dim())?;
        check_dim("map input", spec.decision_dim(), model.input_dim())?;
        Ok(Self {
            model,
            domain: spec.domain().clone(),
            anchors: Vec::new(),
            n_delta_seen: 0,
            alpha_context: spec.alpha(),
            problem: spec.name().to_owned(),
            constraint_evaluations: 0,
            metadata: serde_json::Value::Null,
        })
    }

    pub fn model(&self) -> &SlfnModel {
        &self.model
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn n_delta_seen(&self) -> usize {
        self.n_delta_seen
    }

    pub fn alpha_context(&self) -> f64 {
        self.alpha_context
    }

    pub fn problem(&self) -> &str {
        &self.problem
    }

    /// Constraint evaluations spent training this map (`n_u · n_delta`).
    pub fn constraint_evaluations(&self) -> u64 {
        self.constraint_evaluations
    }

    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    /// Raw network output before clipping.
    pub fn raw(&self, u: &[f64]) -> Result<f64> {
        Ok(self.model.predict(u)?[0])
    }

    /// `clip(predict(u), 0, 1)`.
    pub fn query(&self, u: &[f64]) -> Result<f64> {
        Ok(clip_probability(self.raw(u)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json("serializing map", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(format!("map file {}", path.display()), e))
    }
}

pub fn clip_probability(raw: f64) -> f64 {
    raw.clamp(0.0, 1.0)
}

pub fn query_violation(map: &ViolationMap, u: &[f64]) -> Result<f64> {
    map.query(u)
}

impl ViolationModel for ViolationMap {
    fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    fn violation(&self, u: &[f64]) -> f64 {
        let mut row = vec![0.0; self.model.hidden_count()];
        self.model.hidden_row_into(u, &mut row);
        clip_probability(self.model.output_from_row(&row)[0])
    }
}

/// Mean absolute gap between the map and `samples`-draw Monte-Carlo estimates
/// at `points` uniform decisions; everything is drawn from `seed`.
pub fn holdout_mae<M: ViolationModel + ?Sized>(
    spec: &ProblemSpec,
    map: &M,
    points: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if points == 0 {
        return Err(Error::invalid("holdout needs at least one point"));
    }
    check_dim("map input", spec.decision_dim(), map.input_dim())?;
    let mut rng = crate::seeds::rng(seed);
    let mut total = 0.0;
    for _ in 0..points {
        let u = spec.domain().sample(&mut rng);
        total += (map.violation(&u) - monte_carlo_violation(spec, &u, samples, &mut rng)?).abs();
    }
    Ok(total / points as f64)
}

/// Trains a violation map with `n_u` fixed uniform anchors and `n_delta`
/// streamed disturbances.
///
/// For each disturbance draw the violation indicator of every anchor is
/// computed and the `(anchor, indicator)` pairs are pushed through the RLS
/// update in anchor order. The output weights start from the empty-data RLS
/// state (`β = 0`, `M = I/ridge`).
pub fn train_violation_map<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    n_u: usize,
    n_delta: usize,
    cfg: &ElmConfig,
    rng: &mut R,
) -> Result<ViolationMap> {
    let mut maps = train_violation_map_checkpoints(spec, n_u, &[n_delta], cfg, rng)?;
    Ok(maps.pop().expect("one checkpoint"))
}

/// Same as [`train_violation_map`] but snapshots the map after each of the
/// (ascending) disturbance counts in `checkpoints`. The snapshot at `k` is
/// bit-identical to a separate training run with `n_delta = k` from the same
/// random stream.
pub fn train_violation_map_checkpoints<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    n_u: usize,
    checkpoints: &[usize],
    cfg: &ElmConfig,
    rng: &mut R,
) -> Result<Vec<ViolationMap>> {
    if n_u == 0 {
        return Err(Error::invalid("violation map needs at least one decision anchor"));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("checkpoints must be non-empty and ascending"));
    }
    if n_u < cfg.hidden_count {
        warn!(
            "only {n_u} anchors for {} hidden nodes; the fit will be under-determined",
            cfg.hidden_count
        );
    }
    let domain = spec.domain();
    let model = SlfnModel::init_random(domain.dim(), cfg.hidden_count, 1, cfg.activation, rng)?
        .with_input_scaling(domain)?;
    let anchors = sample_decision_uniform(domain, rng, n_u)?;
    let rows: Vec<Vec<f64>> = anchors
        .iter()
        .map(|a| model.hidden_row(a))
        .collect::<Result<_>>()?;
    let empty: [Vec<f64>; 0] = [];
    let mut rls = RlsState::init(&model, &empty, &empty, cfg.ridge)?;

    let snapshot = |rls: &RlsState, k: usize| -> Result<ViolationMap> {
        Ok(ViolationMap {
            model: rls.apply_to(model.clone())?,
            domain: domain.clone(),
            anchors: anchors.clone(),
            n_delta_seen: k,
            alpha_context: spec.alpha(),
            problem: spec.name().to_owned(),
            constraint_evaluations: (n_u * k) as u64,
            metadata: serde_json::Value::Null,
        })
    };

    let mut maps = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    while next < checkpoints.len() && checkpoints[next] == 0 {
        maps.push(snapshot(&rls, 0)?);
        next += 1;
    }
    let last = *checkpoints.last().unwrap();
    let mut delta = vec![0.0; spec.disturbance_dim()];
    let mut targets = vec![0.0; n_u];
    for k in 1..=last {
        spec.disturbance().sample_into(rng, &mut delta);
        for (t, a) in targets.iter_mut().zip(&anchors) {
            *t = if spec.constraint(a, &delta) > 0.0 { 1.0 } else { 0.0 };
        }
        for (row, t) in rows.iter().zip(&targets) {
            rls.update(row, std::slice::from_ref(t))?;
        }
        while next < checkpoints.len() && checkpoints[next] == k {
            maps.push(snapshot(&rls, k)?);
            next += 1;
        }
    }
    Ok(maps)
}
