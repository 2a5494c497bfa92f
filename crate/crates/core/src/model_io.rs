//! Versioned JSON container shared by every trained model.
//!
//! ```text
//! {"magic": "gadget-detect-model", "version": 1, "kind": "rvfl", "model": {...}}
//! ```
//!
//! Floats are written in shortest round-trip form, so saving and loading is
//! bit-exact and identical models serialize to identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bilstm::BilstmModel;
use crate::embedding::{EmbeddingKind, EmbeddingModel};
use crate::error::{Error, Result};
use crate::rvfl::RvflModel;

pub const MAGIC: &str = "gadget-detect-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    WordEmbedding,
    DocEmbedding,
    Rvfl,
    Bilstm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Embedding(EmbeddingModel),
    Rvfl(RvflModel),
    Bilstm(BilstmModel),
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            SavedModel::Embedding(m) if m.kind == EmbeddingKind::WordLevel => ModelKind::WordEmbedding,
            SavedModel::Embedding(_) => ModelKind::DocEmbedding,
            SavedModel::Rvfl(_) => ModelKind::Rvfl,
            SavedModel::Bilstm(_) => ModelKind::Bilstm,
        }
    }

    pub fn into_embedding(self) -> Result<EmbeddingModel> {
        match self {
            SavedModel::Embedding(m) => Ok(m),
            other => Err(wrong_kind("an embedding", other.kind())),
        }
    }

    pub fn into_rvfl(self) -> Result<RvflModel> {
        match self {
            SavedModel::Rvfl(m) => Ok(m),
            other => Err(wrong_kind("an RVFL", other.kind())),
        }
    }

    pub fn into_bilstm(self) -> Result<BilstmModel> {
        match self {
            SavedModel::Bilstm(m) => Ok(m),
            other => Err(wrong_kind("a Bi-LSTM", other.kind())),
        }
    }
}

fn wrong_kind(expected: &str, got: ModelKind) -> Error {
    Error::Model(format!("expected {expected} model, found {got:?}"))
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    magic: String,
    version: u32,
    kind: ModelKind,
    model: Value,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn to_json(model: &SavedModel) -> Result<String> {
    let body = match model {
        SavedModel::Embedding(m) => serde_json::to_value(m),
        SavedModel::Rvfl(m) => serde_json::to_value(m),
        SavedModel::Bilstm(m) => serde_json::to_value(m),
    }
    .map_err(json_err)?;
    let env = Envelope {
        magic: MAGIC.to_string(),
        version: FORMAT_VERSION,
        kind: model.kind(),
        model: body,
    };
    serde_json::to_string(&env).map_err(json_err)
}

pub fn from_json(text: &str) -> Result<SavedModel> {
    let env: Envelope = serde_json::from_str(text).map_err(json_err)?;
    if env.magic != MAGIC {
        return Err(Error::Format(format!("not a model file (magic {:?})", env.magic)));
    }
    if env.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {} (this build reads {FORMAT_VERSION})",
            env.version
        )));
    }
    let model = match env.kind {
        ModelKind::WordEmbedding | ModelKind::DocEmbedding => {
            let m: EmbeddingModel = serde_json::from_value(env.model).map_err(json_err)?;
            let declared = if env.kind == ModelKind::WordEmbedding {
                EmbeddingKind::WordLevel
            } else {
                EmbeddingKind::DocumentLevel
            };
            if m.kind != declared {
                return Err(Error::Format("envelope kind disagrees with the embedding model".into()));
            }
            m.validate()?;
            SavedModel::Embedding(m)
        }
        ModelKind::Rvfl => {
            let m: RvflModel = serde_json::from_value(env.model).map_err(json_err)?;
            m.validate()?;
            SavedModel::Rvfl(m)
        }
        ModelKind::Bilstm => {
            let m: BilstmModel = serde_json::from_value(env.model).map_err(json_err)?;
            m.validate()?;
            SavedModel::Bilstm(m)
        }
    };
    Ok(model)
}

pub fn save(path: impl AsRef<Path>, model: &SavedModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
