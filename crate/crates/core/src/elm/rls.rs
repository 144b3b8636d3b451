//! Sequential ELM: recursive least-squares updates of the output weights.

use nalgebra::{DMatrix, DVector};

use super::{regularized_inverse, target_matrix, validate_ridge, SlfnModel};
use crate::error::{check_dim, Error, Result};

/// Output weights `β_k` and inverse-Gram accumulator `M_k` after `k` updates.
///
/// Starting from `M_0 = (H_0ᵀH_0 + λI)⁻¹` and streaming rows `(h, t)`, the
/// state tracks the ridge solution `(HᵀH + λI)⁻¹HᵀT` of everything seen so far.
#[derive(Clone, Debug, PartialEq)]
pub struct RlsState {
    beta: DMatrix<f64>,
    gain: DMatrix<f64>,
    update_count: u64,
    mh: DVector<f64>,
    kh: DVector<f64>,
    innovation: DVector<f64>,
}

impl RlsState {
    /// Initializes from an optional batch `(inputs₀, targets₀)`.
    ///
    /// With no initial data `β_0 = 0` and `M_0 = I/λ`.
    pub fn init<X: AsRef<[f64]>, T: AsRef<[f64]>>(
        model: &SlfnModel,
        inputs: &[X],
        targets: &[T],
        ridge: f64,
    ) -> Result<Self> {
        validate_ridge(ridge)?;
        if ridge == 0.0 {
            return Err(Error::invalid("recursive least squares needs a ridge term > 0"));
        }
        check_dim("initial target count", inputs.len(), targets.len())?;
        let hidden = model.hidden_count();
        let m = model.output_dim();
        let (beta, gain) = if inputs.is_empty() {
            (
                DMatrix::zeros(hidden, m),
                DMatrix::identity(hidden, hidden) / ridge,
            )
        } else {
            let h = model.hidden_output(inputs)?;
            let t = target_matrix(targets, m)?;
            let mut gain = regularized_inverse(&h, ridge)?;
            symmetrize(&mut gain);
            let beta = &gain * (h.transpose() * t);
            (beta, gain)
        };
        Ok(Self {
            beta,
            gain,
            update_count: 0,
            mh: DVector::zeros(hidden),
            kh: DVector::zeros(hidden),
            innovation: DVector::zeros(m),
        })
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// The accumulator `M_k`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Absorbs one observation: hidden row `h` (length `N̄`) and target `t` (length `m`).
    ///
    /// ```text
    /// M_{k+1} = M_k − M_k h hᵀ M_k / (1 + hᵀ M_k h)
    /// β_{k+1} = β_k + M_{k+1} h (tᵀ − hᵀ β_k)
    /// ```
    ///
    /// `M_{k+1}` is re-symmetrized as `(M + Mᵀ)/2` after each step.
    pub fn update(&mut self, h: &[f64], t: &[f64]) -> Result<()> {
        let hidden = self.gain.nrows();
        check_dim("hidden row", hidden, h.len())?;
        check_dim("target vector", self.beta.ncols(), t.len())?;
        if h.iter().chain(t).any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite observation in RLS update"));
        }
        let h = DVector::from_column_slice(h);

        self.mh.gemv(1.0, &self.gain, &h, 0.0);
        let denom = 1.0 + h.dot(&self.mh);
        if !(denom.is_finite() && denom > 0.0) {
            return Err(Error::numerical(format!(
                "RLS denominator 1 + hᵀMh = {denom} lost positivity"
            )));
        }
        self.gain.ger(-1.0 / denom, &self.mh, &self.mh, 1.0);
        symmetrize(&mut self.gain);

        self.kh.gemv(1.0, &self.gain, &h, 0.0);
        self.innovation.gemv_tr(-1.0, &self.beta, &h, 0.0);
        for (e, tc) in self.innovation.iter_mut().zip(t) {
            *e += tc;
        }
        self.beta.ger(1.0, &self.kh, &self.innovation, 1.0);
        self.update_count += 1;
        Ok(())
    }

    /// Computes `h(x)` with `model` and absorbs `(h(x), t)`.
    pub fn update_with_input(&mut self, model: &SlfnModel, x: &[f64], t: &[f64]) -> Result<()> {
        let h = model.hidden_row(x)?;
        self.update(&h, t)
    }

    /// Copies the current `β` into `model`.
    pub fn apply_to(&self, model: SlfnModel) -> Result<SlfnModel> {
        model.with_output_weights(self.beta.clone())
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
