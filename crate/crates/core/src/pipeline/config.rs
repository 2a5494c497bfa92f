use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bilstm::TrainConfig;
use crate::corpus::SplitConfig;
use crate::embedding::{EmbedderConfig, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::rvfl::RvflConfig;
use crate::symbolizer::SymbolizationGroup;

/// Where the gadgets come from: a corpus file or the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub vulnerable: usize,
    pub safe: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CorpusSource {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        CorpusSource {
            path: Some(path.into()),
            synthetic: None,
        }
    }

    pub fn synthetic(vulnerable: usize, safe: usize, seed: u64) -> Self {
        CorpusSource {
            path: None,
            synthetic: Some(SyntheticSource {
                vulnerable,
                safe,
                seed,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderChoice {
    Word,
    Doc,
}

/// How document-level training features are obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainFeatures {
    /// The document vectors learned jointly with the embedder.
    Stored,
    /// Re-inferred with the frozen tables, exactly like test gadgets.
    #[default]
    Inferred,
}

/// Embedder settings; unset values take the defaults of the chosen kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub kind: EmbedderChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negatives: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Tokens per word-level gadget vector.
    #[serde(default = "default_tau")]
    pub tau: usize,
    /// Passes over an unseen gadget when inferring its document vector;
    /// defaults to the training epochs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infer_steps: Option<usize>,
    #[serde(default)]
    pub train_features: TrainFeatures,
}

fn default_tau() -> usize {
    DEFAULT_TAU
}

impl EmbeddingSection {
    pub fn new(kind: EmbedderChoice) -> Self {
        EmbeddingSection {
            kind,
            dim: None,
            window: None,
            negatives: None,
            epochs: None,
            learning_rate: None,
            min_count: None,
            seed: None,
            tau: DEFAULT_TAU,
            infer_steps: None,
            train_features: TrainFeatures::Inferred,
        }
    }

    pub fn embedder_config(&self) -> EmbedderConfig {
        let base = match self.kind {
            EmbedderChoice::Word => EmbedderConfig::word(),
            EmbedderChoice::Doc => EmbedderConfig::doc(),
        };
        EmbedderConfig {
            dim: self.dim.unwrap_or(base.dim),
            window: self.window.unwrap_or(base.window),
            negatives: self.negatives.unwrap_or(base.negatives),
            epochs: self.epochs.unwrap_or(base.epochs),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            min_count: self.min_count.unwrap_or(base.min_count),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        }
    }

    /// Length of the feature vectors this embedder produces.
    pub fn feature_len(&self) -> usize {
        let dim = self.embedder_config().dim;
        match self.kind {
            EmbedderChoice::Word => self.tau * dim,
            EmbedderChoice::Doc => dim,
        }
    }

    pub fn infer_steps(&self) -> usize {
        self.infer_steps.unwrap_or_else(|| self.embedder_config().epochs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSection {
    Rvfl(RvflConfig),
    Bilstm(BilstmSection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilstmSection {
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

impl Default for BilstmSection {
    fn default() -> Self {
        BilstmSection {
            train: TrainConfig::default(),
            threshold: 0.5,
        }
    }
}

impl ModelSection {
    pub fn short_name(&self) -> &'static str {
        match self {
            ModelSection::Rvfl(_) => "R",
            ModelSection::Bilstm(_) => "B",
        }
    }
}

/// One end-to-end experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Row label in reports; derived from embedder and model (e.g. `d+R`) when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub corpus: CorpusSource,
    pub group: SymbolizationGroup,
    /// Extra lexicon entries on top of the bundled one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitConfig,
    pub embedding: EmbeddingSection,
    pub model: ModelSection,
    /// Gadget id pairs for the cosine report of a comparison.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cosine_pairs: Vec<(u64, u64)>,
    /// Where the JSON report is written by the command-line tool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(
        corpus: CorpusSource,
        group: SymbolizationGroup,
        embedding: EmbeddingSection,
        model: ModelSection,
    ) -> Self {
        PipelineConfig {
            label: None,
            corpus,
            group,
            lexicon: None,
            split: SplitConfig::default(),
            embedding,
            model,
            cosine_pairs: Vec::new(),
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; relative paths inside it resolve against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            };
            cfg.corpus.path.as_mut().map(fix);
            cfg.lexicon.as_mut().map(fix);
            cfg.output.as_mut().map(fix);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.corpus.path, &self.corpus.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::config(
                    "corpus needs exactly one of `path` or `synthetic`",
                ))
            }
        }
        self.embedding.embedder_config().validate()?;
        if self.embedding.tau == 0 {
            return Err(Error::config("tau must be positive"));
        }
        match &self.model {
            ModelSection::Rvfl(r) => {
                if r.hidden_count == 0 {
                    return Err(Error::config("RVFL hidden_count must be positive"));
                }
                if !(r.lambda >= 0.0) {
                    return Err(Error::config("RVFL lambda must be >= 0"));
                }
            }
            ModelSection::Bilstm(b) => b.train.validate()?,
        }
        Ok(())
    }

    /// `w+B`, `d+R`, ... unless an explicit label is set.
    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let e = match self.embedding.kind {
                EmbedderChoice::Word => "w",
                EmbedderChoice::Doc => "d",
            };
            format!("{e}+{}", self.model.short_name())
        })
    }

    /// Timesteps fed to the Bi-LSTM: one per token at word level, 5 at document level.
    pub fn bilstm_seq_len(&self) -> Option<usize> {
        match &self.model {
            ModelSection::Bilstm(b) => Some(b.train.seq_len.unwrap_or(match self.embedding.kind {
                EmbedderChoice::Word => self.embedding.tau,
                EmbedderChoice::Doc => 5,
            })),
            ModelSection::Rvfl(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
group = "FV"

[corpus]
synthetic = { vulnerable = 10, safe = 12, seed = 3 }

[split]
train_fraction = 0.8
seed = 4
stratified = true

[embedding]
kind = "doc"
epochs = 3

[model]
kind = "bilstm"
epochs = 1
units = 8
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = PipelineConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.group, SymbolizationGroup::FV);
        assert_eq!(cfg.embedding.embedder_config().dim, 250);
        assert_eq!(cfg.embedding.embedder_config().epochs, 3);
        assert_eq!(cfg.embedding.feature_len(), 250);
        assert_eq!(cfg.display_label(), "d+B");
        assert_eq!(cfg.bilstm_seq_len(), Some(5));
        match &cfg.model {
            ModelSection::Bilstm(b) => {
                assert_eq!(b.train.units, 8);
                assert_eq!(b.train.batch_size, 64);
                assert_eq!(b.threshold, 0.5);
            }
            other => panic!("{other:?}"),
        }
        let again = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn word_level_defaults_to_2500() {
        let text = SAMPLE.replace("kind = \"doc\"", "kind = \"word\"");
        let cfg = PipelineConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.embedding.feature_len(), 2500);
        assert_eq!(cfg.bilstm_seq_len(), Some(50));
        assert_eq!(cfg.display_label(), "w+B");
    }

    #[test]
    fn rejects_bad_configs() {
        let both = SAMPLE.replace("[corpus]\n", "[corpus]\npath = \"x.txt\"\n");
        assert!(PipelineConfig::from_toml(&both).is_err());
        let typo = SAMPLE.replace("group = ", "gruop = ");
        assert!(PipelineConfig::from_toml(&typo).is_err());
        let bad_group = SAMPLE.replace("\"FV\"", "\"FX\"");
        assert!(PipelineConfig::from_toml(&bad_group).is_err());
        let bad_model = SAMPLE.replace("kind = \"bilstm\"", "kind = \"svm\"");
        assert!(PipelineConfig::from_toml(&bad_model).is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let text = SAMPLE.replace(
            "synthetic = { vulnerable = 10, safe = 12, seed = 3 }",
            "path = \"data/c.txt\"",
        );
        let p = dir.path().join("exp.toml");
        std::fs::write(&p, text).unwrap();
        let cfg = PipelineConfig::read(&p).unwrap();
        assert_eq!(cfg.corpus.path.unwrap(), dir.path().join("data/c.txt"));
    }
}
