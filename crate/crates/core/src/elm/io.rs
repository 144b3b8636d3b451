//! Versioned JSON document for persisted networks.
//!
//! Floats are written by `serde_json` in shortest round-trip form, so a
//! save/load cycle reproduces every weight bit for bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Activation, InputScaling, SlfnModel};
use crate::error::{check_dim, Error, Result};

pub const MODEL_FORMAT: &str = "ccp-elm/slfn";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub hidden_count: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub input_scaling: Option<InputScaling>,
    /// Row-major `hidden_count × input_dim`.
    pub hidden_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    /// Row-major `hidden_count × output_dim`.
    pub output_weights: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl From<SlfnModel> for ModelDocument {
    fn from(m: SlfnModel) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            input_dim: m.input_dim(),
            hidden_count: m.hidden_count(),
            output_dim: m.output_dim(),
            activation: m.activation,
            hidden_weights: row_major(&m.hidden_weights),
            hidden_biases: m.hidden_biases.as_slice().to_vec(),
            output_weights: row_major(&m.output_weights),
            input_scaling: m.scaling,
        }
    }
}

impl TryFrom<ModelDocument> for SlfnModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT {
            return Err(Error::invalid(format!(
                "unexpected model format {:?}, expected {MODEL_FORMAT:?}",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model version {} (this build reads {MODEL_VERSION})",
                doc.version
            )));
        }
        check_dim("hidden weight entries", doc.hidden_count * doc.input_dim, doc.hidden_weights.len())?;
        check_dim("hidden bias entries", doc.hidden_count, doc.hidden_biases.len())?;
        check_dim("output weight entries", doc.hidden_count * doc.output_dim, doc.output_weights.len())?;
        SlfnModel::from_parts(
            doc.activation,
            DMatrix::from_row_slice(doc.hidden_count, doc.input_dim, &doc.hidden_weights),
            DVector::from_vec(doc.hidden_biases),
            DMatrix::from_row_slice(doc.hidden_count, doc.output_dim, &doc.output_weights),
            doc.input_scaling,
        )
    }
}

impl SlfnModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("serializing model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("parsing model document", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
