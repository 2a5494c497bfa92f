//! Fixed-length feature vectors produced by the embedders.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub source_id: u64,
    pub label: Label,
}

/// A set of feature vectors that all share one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    dim: usize,
    vectors: Vec<FeatureVector>,
}

impl FeatureDataset {
    pub fn new(dim: usize, vectors: Vec<FeatureVector>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("feature dimension must be positive"));
        }
        if let Some(v) = vectors.iter().find(|v| v.values.len() != dim) {
            return Err(Error::shape(format!(
                "feature vector for gadget {} has length {}, expected {dim}",
                v.source_id,
                v.values.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.values.iter().any(|x| !x.is_finite())) {
            return Err(Error::Numeric(format!(
                "feature vector for gadget {} has a non-finite entry",
                v.source_id
            )));
        }
        Ok(FeatureDataset { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> Vec<Label> {
        self.vectors.iter().map(|v| v.label).collect()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.vectors.iter().map(|v| v.source_id).collect()
    }

    /// All vectors stacked as the rows of an `n × dim` matrix.
    pub fn to_matrix(&self) -> Matrix {
        let data = self.vectors.iter().flat_map(|v| v.values.iter().copied()).collect();
        Matrix::from_vec(self.len(), self.dim, data).expect("lengths checked on construction")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: FeatureDataset =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        FeatureDataset::new(raw.dim, raw.vectors)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reshape a flat vector row-major into `t` timesteps of `len / t` features.
pub fn shape_input(values: &[f64], t: usize) -> Result<Matrix> {
    if t == 0 || values.len() % t != 0 || values.is_empty() {
        return Err(Error::shape(format!(
            "cannot split a length-{} vector into {t} timesteps",
            values.len()
        )));
    }
    Matrix::from_vec(t, values.len() / t, values.to_vec())
}
