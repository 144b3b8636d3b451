//! Single-hidden-layer feedforward networks trained by extreme learning machine.
//!
//! The hidden layer `g(ω_j·x + b_j)` is drawn once at random and frozen; only
//! the linear output weights `β` are fitted, either in one shot from the
//! hidden-layer output matrix `H` ([`SlfnModel::batch_train`]) or one
//! observation at a time by recursive least squares ([`RlsState`]).

mod io;
mod rls;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::BoxDomain;

pub use io::{ModelDocument, MODEL_FORMAT, MODEL_VERSION};
pub use rls::RlsState;

/// Ridge term used when none is requested explicitly.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Smooth (C^∞) hidden-node activation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `1 / (1 + e^{−z})`
    #[default]
    Sigmoid,
    Tanh,
    /// `e^{−z²}`
    Gaussian,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Gaussian => (-z * z).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "gaussian" => Ok(Activation::Gaussian),
            other => Err(Error::invalid(format!(
                "unknown activation {other:?} (expected sigmoid, tanh or gaussian)"
            ))),
        }
    }
}

/// Affine map of a box onto `[−1, 1]^n`, applied to inputs before the hidden layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputScaling {
    pub fn from_domain(domain: &BoxDomain) -> Self {
        Self {
            lower: domain.lower().to_vec(),
            upper: domain.upper().to_vec(),
        }
    }

    #[inline]
    fn apply(&self, i: usize, x: f64) -> f64 {
        2.0 * (x - self.lower[i]) / (self.upper[i] - self.lower[i]) - 1.0
    }
}

/// Network `t̂ = Σ_j β_j g(ω_j·x + b_j)` with a frozen random hidden layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelDocument", try_from = "ModelDocument")]
pub struct SlfnModel {
    activation: Activation,
    /// `N̄ × n`, row `j` is `ω_j`.
    hidden_weights: DMatrix<f64>,
    hidden_biases: DVector<f64>,
    /// `N̄ × m`, row `j` is `β_j`.
    output_weights: DMatrix<f64>,
    scaling: Option<InputScaling>,
}

impl SlfnModel {
    /// Draws `ω` and `b` i.i.d. uniform on `[−1, 1]`; `β` starts at zero.
    pub fn init_random<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_count: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_count == 0 || output_dim == 0 {
            return Err(Error::invalid(format!(
                "network dimensions must be positive, got n={input_dim}, N̄={hidden_count}, m={output_dim}"
            )));
        }
        let mut draw = || rng.random_range(-1.0..=1.0);
        // Row-major fill so the stream order matches the persisted layout.
        let weights: Vec<f64> = (0..hidden_count * input_dim).map(|_| draw()).collect();
        let biases: Vec<f64> = (0..hidden_count).map(|_| draw()).collect();
        Ok(Self {
            activation,
            hidden_weights: DMatrix::from_row_slice(hidden_count, input_dim, &weights),
            hidden_biases: DVector::from_vec(biases),
            output_weights: DMatrix::zeros(hidden_count, output_dim),
            scaling: None,
        })
    }

    pub(crate) fn from_parts(
        activation: Activation,
        hidden_weights: DMatrix<f64>,
        hidden_biases: DVector<f64>,
        output_weights: DMatrix<f64>,
        scaling: Option<InputScaling>,
    ) -> Result<Self> {
        let hidden = hidden_weights.nrows();
        let n = hidden_weights.ncols();
        if hidden == 0 || n == 0 || output_weights.ncols() == 0 {
            return Err(Error::invalid("network dimensions must be positive"));
        }
        check_dim("hidden biases", hidden, hidden_biases.len())?;
        check_dim("output weight rows", hidden, output_weights.nrows())?;
        if let Some(s) = &scaling {
            check_dim("input scaling lower", n, s.lower.len())?;
            check_dim("input scaling upper", n, s.upper.len())?;
            BoxDomain::new(s.lower.clone(), s.upper.clone())?;
        }
        let finite = hidden_weights.iter().all(|v| v.is_finite())
            && hidden_biases.iter().all(|v| v.is_finite())
            && output_weights.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::numerical("network parameters must be finite"));
        }
        Ok(Self {
            activation,
            hidden_weights,
            hidden_biases,
            output_weights,
            scaling,
        })
    }

    /// Attaches min-max scaling of `domain` onto `[−1, 1]^n`.
    pub fn with_input_scaling(mut self, domain: &BoxDomain) -> Result<Self> {
        check_dim("scaling domain", self.input_dim(), domain.dim())?;
        self.scaling = Some(InputScaling::from_domain(domain));
        Ok(self)
    }

    pub fn with_output_weights(mut self, beta: DMatrix<f64>) -> Result<Self> {
        check_dim("output weight rows", self.hidden_count(), beta.nrows())?;
        check_dim("output weight columns", self.output_dim(), beta.ncols())?;
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("output weights must be finite"));
        }
        self.output_weights = beta;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_weights.ncols()
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden_weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.output_weights.ncols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn hidden_weights(&self) -> &DMatrix<f64> {
        &self.hidden_weights
    }

    pub fn hidden_biases(&self) -> &DVector<f64> {
        &self.hidden_biases
    }

    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.output_weights
    }

    pub fn input_scaling(&self) -> Option<&InputScaling> {
        self.scaling.as_ref()
    }

    /// Writes the hidden-layer row `h(x)` into `out`. Dimensions are the caller's problem.
    #[inline]
    pub(crate) fn hidden_row_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut z = self.hidden_biases[j];
            for (i, &xi) in x.iter().enumerate() {
                let v = match &self.scaling {
                    Some(s) => s.apply(i, xi),
                    None => xi,
                };
                z += self.hidden_weights[(j, i)] * v;
            }
            *o = self.activation.apply(z);
        }
    }

    pub fn hidden_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("network input", self.input_dim(), x.len())?;
        let mut out = vec![0.0; self.hidden_count()];
        self.hidden_row_into(x, &mut out);
        Ok(out)
    }

    /// Hidden-layer output matrix `H` (`N × N̄`), `H[i][j] = g(ω_j·x_i + b_j)`.
    pub fn hidden_output<X: AsRef<[f64]>>(&self, inputs: &[X]) -> Result<DMatrix<f64>> {
        let mut h = DMatrix::zeros(inputs.len(), self.hidden_count());
        let mut row = vec![0.0; self.hidden_count()];
        for (i, x) in inputs.iter().enumerate() {
            let x = x.as_ref();
            check_dim("network input", self.input_dim(), x.len())?;
            self.hidden_row_into(x, &mut row);
            for (j, v) in row.iter().enumerate() {
                h[(i, j)] = *v;
            }
        }
        Ok(h)
    }

    /// Network output for one input.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("network input", self.input_dim(), x.len())?;
        let mut row = vec![0.0; self.hidden_count()];
        self.hidden_row_into(x, &mut row);
        Ok(self.output_from_row(&row))
    }

    pub(crate) fn output_from_row(&self, row: &[f64]) -> Vec<f64> {
        (0..self.output_dim())
            .map(|c| {
                row.iter()
                    .enumerate()
                    .map(|(j, h)| h * self.output_weights[(j, c)])
                    .sum()
            })
            .collect()
    }

    /// Fits `β` by least squares on `H β ≈ T`.
    ///
    /// With `ridge > 0` this solves `(HᵀH + ridge·I) β = HᵀT` by Cholesky;
    /// with `ridge == 0` it applies the Moore–Penrose pseudoinverse of `H`
    /// computed by SVD. The hidden layer is left untouched.
    pub fn batch_train<X: AsRef<[f64]>, T: AsRef<[f64]>>(
        &self,
        inputs: &[X],
        targets: &[T],
        ridge: f64,
    ) -> Result<SlfnModel> {
        if inputs.is_empty() {
            return Err(Error::invalid("batch training needs at least one sample"));
        }
        check_dim("target count", inputs.len(), targets.len())?;
        let h = self.hidden_output(inputs)?;
        let t = target_matrix(targets, self.output_dim())?;
        let beta = solve_output_weights(&h, &t, ridge)?;
        self.clone().with_output_weights(beta)
    }
}

pub(crate) fn target_matrix<T: AsRef<[f64]>>(targets: &[T], m: usize) -> Result<DMatrix<f64>> {
    let mut t = DMatrix::zeros(targets.len(), m);
    for (i, row) in targets.iter().enumerate() {
        let row = row.as_ref();
        check_dim("target vector", m, row.len())?;
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::numerical(format!("non-finite target at sample {i}")));
            }
            t[(i, c)] = *v;
        }
    }
    Ok(t)
}

fn validate_ridge(ridge: f64) -> Result<()> {
    if ridge.is_finite() && ridge >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("ridge term must be finite and ≥ 0, got {ridge}")))
    }
}

/// Eigenvalue ratio of a symmetric matrix, used in error diagnostics.
pub(crate) fn symmetric_condition(a: &DMatrix<f64>) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `(HᵀH + ridge·I)⁻¹` together with the Gram matrix it came from.
pub(crate) fn regularized_inverse(h: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let mut gram = h.transpose() * h;
    for j in 0..gram.nrows() {
        gram[(j, j)] += ridge;
    }
    let chol = gram.clone().cholesky().ok_or_else(|| Error::Numerical {
        message: format!("normal matrix HᵀH + {ridge:e}·I is not positive definite"),
        condition: Some(symmetric_condition(&gram)),
    })?;
    Ok(chol.inverse())
}

pub(crate) fn solve_output_weights(
    h: &DMatrix<f64>,
    t: &DMatrix<f64>,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    validate_ridge(ridge)?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("hidden-layer output contains non-finite values"));
    }
    let beta = if ridge > 0.0 {
        let mut gram = h.transpose() * h;
        for j in 0..gram.nrows() {
            gram[(j, j)] += ridge;
        }
        let rhs = h.transpose() * t;
        match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => {
                return Err(Error::Numerical {
                    message: format!("normal matrix HᵀH + {ridge:e}·I is not positive definite"),
                    condition: Some(symmetric_condition(&gram)),
                })
            }
        }
    } else {
        let svd = h.clone().svd(true, true);
        let s_max = svd.singular_values.max();
        let tol = f64::EPSILON * h.nrows().max(h.ncols()) as f64 * s_max;
        svd.solve(t, tol).map_err(|msg| Error::numerical(msg.to_string()))?
    };
    if beta.iter().any(|v| !v.is_finite()) {
        let cond = symmetric_condition(&(h.transpose() * h));
        return Err(Error::Numerical {
            message: "least-squares solve produced non-finite output weights".into(),
            condition: Some(cond),
        });
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_inputs(rng: &mut seeds::Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn init_is_reproducible_and_shaped() {
        let a = SlfnModel::init_random(2, 50, 1, Activation::Sigmoid, &mut seeds::rng(4)).unwrap();
        let b = SlfnModel::init_random(2, 50, 1, Activation::Sigmoid, &mut seeds::rng(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hidden_weights().shape(), (50, 2));
        assert_eq!(a.hidden_biases().len(), 50);
        assert_eq!(a.output_weights().shape(), (50, 1));
        assert!(a.output_weights().iter().all(|v| *v == 0.0));
        assert!(SlfnModel::init_random(0, 5, 1, Activation::Sigmoid, &mut seeds::rng(4)).is_err());
        assert!(SlfnModel::init_random(2, 0, 1, Activation::Sigmoid, &mut seeds::rng(4)).is_err());
        assert!(SlfnModel::init_random(2, 5, 0, Activation::Sigmoid, &mut seeds::rng(4)).is_err());
    }

    #[test]
    fn init_weights_in_unit_interval() {
        let m = SlfnModel::init_random(100, 1000, 1, Activation::Tanh, &mut seeds::rng(8)).unwrap();
        let (lo, hi) = m
            .hidden_weights()
            .iter()
            .chain(m.hidden_biases().iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        assert!(lo >= -1.0 && hi <= 1.0);
        assert!(lo < -0.99 && hi > 0.99);
    }

    #[test]
    fn sigmoid_at_zero_preactivation() {
        // ω = (1, 1), b = -0.5; x = (0.25, 0.25) gives z = 0.
        let model = SlfnModel::from_parts(
            Activation::Sigmoid,
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![-0.5]),
            DMatrix::zeros(1, 1),
            None,
        )
        .unwrap();
        let h = model.hidden_output(&[vec![0.25, 0.25]]).unwrap();
        assert_eq!(h[(0, 0)], 0.5);
    }

    #[test]
    fn hidden_output_shape_and_row_stacking() {
        let mut rng = seeds::rng(10);
        let m = SlfnModel::init_random(2, 3, 1, Activation::Sigmoid, &mut rng).unwrap();
        assert_eq!(m.hidden_output(&[vec![0.1, 0.2]]).unwrap().shape(), (1, 3));
        let x1 = random_inputs(&mut rng, 4, 2);
        let x2 = random_inputs(&mut rng, 3, 2);
        let all: Vec<_> = x1.iter().chain(&x2).cloned().collect();
        let h = m.hidden_output(&all).unwrap();
        let h1 = m.hidden_output(&x1).unwrap();
        let h2 = m.hidden_output(&x2).unwrap();
        assert_eq!(h.rows(0, 4), h1.rows(0, 4));
        assert_eq!(h.rows(4, 3), h2.rows(0, 3));
        assert!(m.hidden_output(&[vec![0.0]]).is_err());
    }

    #[test]
    fn exact_interpolation_square_system() {
        let mut rng = seeds::rng(11);
        let n_hidden = 20;
        let model = SlfnModel::init_random(2, n_hidden, 1, Activation::Sigmoid, &mut rng).unwrap();
        let x = random_inputs(&mut rng, n_hidden, 2);
        let t = random_inputs(&mut rng, n_hidden, 1);
        let fitted = model.batch_train(&x, &t, 0.0).unwrap();
        for (xi, ti) in x.iter().zip(&t) {
            assert!((fitted.predict(xi).unwrap()[0] - ti[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_targets_give_zero_beta() {
        let mut rng = seeds::rng(12);
        let model = SlfnModel::init_random(2, 10, 2, Activation::Sigmoid, &mut rng).unwrap();
        let x = random_inputs(&mut rng, 30, 2);
        let t = vec![vec![0.0, 0.0]; 30];
        let fitted = model.batch_train(&x, &t, DEFAULT_RIDGE).unwrap();
        assert!(fitted.output_weights().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn recovers_planted_output_weights() {
        let mut rng = seeds::rng(13);
        let model = SlfnModel::init_random(3, 20, 1, Activation::Sigmoid, &mut rng).unwrap();
        let x = random_inputs(&mut rng, 200, 3);
        let planted = DMatrix::from_fn(20, 1, |_, _| rng.random_range(-1.0..1.0));
        let h = model.hidden_output(&x).unwrap();
        let t_mat = &h * &planted;
        let t: Vec<Vec<f64>> = (0..200).map(|i| vec![t_mat[(i, 0)]]).collect();
        let fitted = model.batch_train(&x, &t, 0.0).unwrap();
        for (xi, ti) in x.iter().zip(&t) {
            assert!((fitted.predict(xi).unwrap()[0] - ti[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn batch_train_argument_errors() {
        let mut rng = seeds::rng(14);
        let model = SlfnModel::init_random(2, 5, 1, Activation::Sigmoid, &mut rng).unwrap();
        let x = random_inputs(&mut rng, 5, 2);
        let t = random_inputs(&mut rng, 5, 1);
        let empty: Vec<Vec<f64>> = vec![];
        assert!(model.batch_train(&empty, &empty, 1e-6).is_err());
        assert!(model.batch_train(&x, &t[..4], 1e-6).is_err());
        assert!(model.batch_train(&x, &t, -1.0).is_err());
        let bad = vec![vec![f64::NAN]; 5];
        assert!(matches!(model.batch_train(&x, &bad, 1e-6), Err(Error::Numerical { .. })));
    }

    #[test]
    fn singular_normal_matrix_reports_condition() {
        // Duplicate hidden nodes make HᵀH exactly singular.
        let model = SlfnModel::from_parts(
            Activation::Sigmoid,
            DMatrix::from_row_slice(2, 1, &[0.5, 0.5]),
            DVector::from_vec(vec![0.1, 0.1]),
            DMatrix::zeros(2, 1),
            None,
        )
        .unwrap();
        let h = model.hidden_output(&[vec![0.3], vec![-0.2]]).unwrap();
        let gram = h.transpose() * &h;
        assert!(symmetric_condition(&gram) > 1e15);
        match regularized_inverse(&DMatrix::zeros(3, 2), 0.0) {
            Err(Error::Numerical { condition, .. }) => assert!(condition.is_some()),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn predict_zero_beta_and_consistency() {
        let mut rng = seeds::rng(15);
        let model = SlfnModel::init_random(2, 7, 3, Activation::Gaussian, &mut rng).unwrap();
        assert_eq!(model.predict(&[0.3, -0.1]).unwrap(), vec![0.0; 3]);
        let beta = DMatrix::from_fn(7, 3, |_, _| rng.random_range(-2.0..2.0));
        let model = model.with_output_weights(beta.clone()).unwrap();
        let x = [0.4, 0.9];
        let via_h = model.hidden_output(&[x.to_vec()]).unwrap() * &beta;
        let direct = model.predict(&x).unwrap();
        for c in 0..3 {
            assert!((via_h[(0, c)] - direct[c]).abs() <= 1e-14);
        }
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn input_scaling_maps_box_to_unit_cube() {
        let domain = BoxDomain::cube(2, -6.0, 5.0).unwrap();
        let model = SlfnModel::from_parts(
            Activation::Tanh,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DVector::zeros(2),
            DMatrix::zeros(2, 1),
            None,
        )
        .unwrap()
        .with_input_scaling(&domain)
        .unwrap();
        let row = model.hidden_row(&[-6.0, 5.0]).unwrap();
        assert!((row[0] - (-1.0f64).tanh()).abs() < 1e-15);
        assert!((row[1] - 1.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn activation_names_round_trip() {
        for a in [Activation::Sigmoid, Activation::Tanh, Activation::Gaussian] {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("relu".parse::<Activation>().is_err());
    }

    proptest! {
        #[test]
        fn prediction_is_linear_in_beta(seed in 0u64..1000, x0 in -1.0f64..1.0, x1 in -1.0f64..1.0) {
            let mut rng = seeds::rng(seed);
            let model = SlfnModel::init_random(2, 6, 2, Activation::Sigmoid, &mut rng).unwrap();
            let b1 = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
            let b2 = DMatrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
            let p1 = model.clone().with_output_weights(b1.clone()).unwrap().predict(&[x0, x1]).unwrap();
            let p2 = model.clone().with_output_weights(b2.clone()).unwrap().predict(&[x0, x1]).unwrap();
            let p12 = model.with_output_weights(b1 + b2).unwrap().predict(&[x0, x1]).unwrap();
            for c in 0..2 {
                prop_assert!((p12[c] - (p1[c] + p2[c])).abs() < 1e-12);
            }
        }
    }
}
