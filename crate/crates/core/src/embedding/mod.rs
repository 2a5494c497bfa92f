//! Vector representations of symbolized gadgets.
//!
//! Two embedders share one model type:
//!
//! * word level: skip-gram with negative sampling; a gadget becomes the
//!   concatenation of its first `tau` token vectors, zero padded;
//! * document level: paragraph vectors in the distributed-memory form, where
//!   the document vector and the averaged context word vectors jointly predict
//!   the target token. Unseen gadgets get a vector by gradient steps on a fresh
//!   document vector with every other table frozen.
//!
//! Training is single threaded and bit-reproducible from the seed.

mod pvdm;
mod sgns;
mod vocab;

use serde::{Deserialize, Serialize};

pub use pvdm::{infer_doc_vector, train_doc_embedder};
pub use sgns::train_word_embedder;
pub use vocab::{build_vocabulary, VocabEntry, Vocabulary};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Vector width of one token for the word-level embedder.
pub const DEFAULT_WORD_DIM: usize = 50;
/// Number of token vectors concatenated into a word-level gadget vector.
pub const DEFAULT_TAU: usize = 50;
pub const DEFAULT_DOC_DIM: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingKind {
    WordLevel,
    DocumentLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Floor of the linearly decaying learning rate.
    pub min_learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::word()
    }
}

impl EmbedderConfig {
    pub fn word() -> Self {
        EmbedderConfig {
            dim: DEFAULT_WORD_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            min_count: 1,
            seed: 1,
        }
    }

    pub fn doc() -> Self {
        EmbedderConfig {
            dim: DEFAULT_DOC_DIM,
            epochs: 20,
            ..EmbedderConfig::word()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("embedding dim must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("embedding epochs must be positive"));
        }
        if self.window == 0 {
            return Err(Error::config("window must be positive"));
        }
        if self.negatives == 0 {
            return Err(Error::config("negative-sample count must be positive"));
        }
        if !(self.learning_rate > 0.0) || self.min_learning_rate < 0.0 {
            return Err(Error::config("learning rates must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub kind: EmbeddingKind,
    pub config: EmbedderConfig,
    pub vocab: Vocabulary,
    /// `|V| × dim` input vectors.
    pub word_vectors: Matrix,
    /// `|V| × dim` output vectors used by negative sampling.
    pub context_vectors: Matrix,
    /// `n_docs × dim`, document-level models only.
    pub doc_vectors: Option<Matrix>,
    /// Mean negative-sampling loss per training epoch.
    pub epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn word_vector(&self, token: &str) -> Option<&[f64]> {
        self.vocab.index_of(token).map(|i| self.word_vectors.row(i))
    }

    pub fn doc_vector(&self, doc: usize) -> Option<&[f64]> {
        self.doc_vectors
            .as_ref()
            .filter(|m| doc < m.rows())
            .map(|m| m.row(doc))
    }

    /// Check the structural invariants (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expect = (self.vocab.len(), self.dim());
        if self.word_vectors.shape() != expect || self.context_vectors.shape() != expect {
            return Err(Error::Format("vector tables do not match vocabulary × dim".into()));
        }
        match (self.kind, &self.doc_vectors) {
            (EmbeddingKind::WordLevel, Some(_)) => {
                return Err(Error::Format("word-level model carries document vectors".into()))
            }
            (EmbeddingKind::DocumentLevel, None) => {
                return Err(Error::Format("document-level model lacks document vectors".into()))
            }
            (_, Some(d)) if d.cols() != self.dim() => {
                return Err(Error::Format("document table width differs from dim".into()))
            }
            _ => {}
        }
        let finite = self.word_vectors.is_finite()
            && self.context_vectors.is_finite()
            && self.doc_vectors.as_ref().is_none_or(Matrix::is_finite);
        if !finite {
            return Err(Error::Format("non-finite vector entry".into()));
        }
        Ok(())
    }

    pub(crate) fn require(&self, kind: EmbeddingKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Model(format!(
                "expected a {kind:?} embedding model, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Concatenate the vectors of the first `tau` tokens; OOV tokens and padding are zeros.
pub fn vectorize_word_level<S: AsRef<str>>(
    tokens: &[S],
    model: &EmbeddingModel,
    tau: usize,
) -> Result<Vec<f64>> {
    model.require(EmbeddingKind::WordLevel)?;
    if tau == 0 {
        return Err(Error::config("tau must be positive"));
    }
    let dim = model.dim();
    let mut out = vec![0.0; tau * dim];
    for (slot, tok) in out.chunks_exact_mut(dim).zip(tokens) {
        if let Some(v) = model.word_vector(tok.as_ref()) {
            slot.copy_from_slice(v);
        }
    }
    Ok(out)
}

/// `A·B / (‖A‖₂ ‖B‖₂)`. Undefined for zero vectors or mismatched lengths.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::Numeric("cosine is undefined for a zero vector".into()));
    }
    Ok(ab / (aa.sqrt() * bb.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_cases() {
        let a = [3.0, -1.0, 2.0];
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let v = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((v - 0.70710678).abs() < 1e-8, "{v}");
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EmbedderConfig::word().validate().is_ok());
        let bad = EmbedderConfig { dim: 0, ..EmbedderConfig::word() };
        assert!(bad.validate().is_err());
        let bad = EmbedderConfig { epochs: 0, ..EmbedderConfig::doc() };
        assert!(bad.validate().is_err());
    }
}
