//! End-to-end experiments: split → symbolize → embed → train → detect → metrics.
//!
//! The embedder is fitted on the training split only; an id audit checks that
//! no test gadget reaches it. Reported times cover the classifier's training
//! call and its batch prediction call, nothing else.

mod config;
mod report;

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

pub use config::{
    BilstmSection, CorpusSource, EmbedderChoice, EmbeddingSection, ModelSection, PipelineConfig,
    SyntheticSource, TrainFeatures,
};
pub use report::{render_cosine, render_table, CosineReport, CosineRow, EvaluationReport, TIMING_NOTE};

use crate::bilstm::{predict_bilstm_batch, train_bilstm, BilstmModel, TrainConfig};
use crate::corpus::{split_dataset, Corpus, Label};
use crate::dataset::{FeatureDataset, FeatureVector};
use crate::embedding::{
    cosine, infer_doc_vector, train_doc_embedder, train_word_embedder, vectorize_word_level,
    EmbeddingKind, EmbeddingModel,
};
use crate::error::{Error, Result, StageExt};
use crate::metrics::ConfusionCounts;
use crate::rvfl::{init_rvfl_with, predict_rvfl_batch, train_rvfl_labels, RvflModel};
use crate::symbolizer::{symbolize, Lexicon, SymbolizationGroup, SymbolizedGadget};
use crate::synthetic::generate_synthetic;

pub fn load_corpus(source: &CorpusSource) -> Result<Corpus> {
    let corpus = match (&source.path, &source.synthetic) {
        (Some(p), None) => Corpus::read(p)?,
        (None, Some(s)) => generate_synthetic(s.vulnerable, s.safe, s.seed),
        _ => return Err(Error::config("corpus needs exactly one of `path` or `synthetic`")),
    };
    corpus.validate()?;
    Ok(corpus)
}

pub fn load_lexicon(extra: Option<&Path>) -> Result<Lexicon> {
    match extra {
        Some(p) => Lexicon::default_extended_with(p),
        None => Ok(Lexicon::default()),
    }
}

pub fn symbolize_all(
    corpus: &Corpus,
    group: SymbolizationGroup,
    lexicon: &Lexicon,
) -> Result<Vec<SymbolizedGadget>> {
    corpus.gadgets.iter().map(|g| symbolize(g, group, lexicon)).collect()
}

fn token_lists(gadgets: &[SymbolizedGadget]) -> Vec<Vec<String>> {
    gadgets.iter().map(SymbolizedGadget::token_texts).collect()
}

pub fn fit_embedder(section: &EmbeddingSection, gadgets: &[SymbolizedGadget]) -> Result<EmbeddingModel> {
    let cfg = section.embedder_config();
    let docs = token_lists(gadgets);
    match section.kind {
        EmbedderChoice::Word => train_word_embedder(&docs, &cfg),
        EmbedderChoice::Doc => train_doc_embedder(&docs, &cfg),
    }
}

/// Seed of the document-vector inference for one gadget; independent of its position.
pub fn inference_seed(model: &EmbeddingModel, gadget_id: u64) -> u64 {
    model.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ gadget_id
}

/// One feature vector per gadget.
///
/// `train_rows` gives, for document-level models with stored training features,
/// the row of each gadget in the model's document table.
pub fn vectorize(
    section: &EmbeddingSection,
    model: &EmbeddingModel,
    gadgets: &[SymbolizedGadget],
    train_rows: bool,
) -> Result<FeatureDataset> {
    let mut vectors = Vec::with_capacity(gadgets.len());
    for (row, g) in gadgets.iter().enumerate() {
        let tokens = g.token_texts();
        let values = match model.kind {
            EmbeddingKind::WordLevel => vectorize_word_level(&tokens, model, section.tau)?,
            EmbeddingKind::DocumentLevel if train_rows && section.train_features == TrainFeatures::Stored => model
                .doc_vector(row)
                .ok_or_else(|| Error::shape(format!("no stored document vector for row {row}")))?
                .to_vec(),
            EmbeddingKind::DocumentLevel => {
                infer_doc_vector(&tokens, model, section.infer_steps(), inference_seed(model, g.source_id))?
            }
        };
        vectors.push(FeatureVector {
            values,
            source_id: g.source_id,
            label: g.label,
        });
    }
    let dim = match model.kind {
        EmbeddingKind::WordLevel => section.tau * model.dim(),
        EmbeddingKind::DocumentLevel => model.dim(),
    };
    FeatureDataset::new(dim, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    Rvfl(RvflModel),
    Bilstm { model: BilstmModel, threshold: f64 },
}

impl TrainedClassifier {
    pub fn predict(&self, data: &FeatureDataset) -> Result<Vec<Label>> {
        Ok(match self {
            TrainedClassifier::Rvfl(m) => predict_rvfl_batch(m, &data.to_matrix())?
                .into_iter()
                .map(|p| p.0)
                .collect(),
            TrainedClassifier::Bilstm { model, threshold } => predict_bilstm_batch(model, data, *threshold)?
                .into_iter()
                .map(|p| p.0)
                .collect(),
        })
    }
}

/// Train the configured classifier; `seq_len` is used by the Bi-LSTM only.
pub fn train_classifier(
    section: &ModelSection,
    seq_len: Option<usize>,
    data: &FeatureDataset,
) -> Result<TrainedClassifier> {
    match section {
        ModelSection::Rvfl(cfg) => {
            let model = init_rvfl_with(data.dim(), cfg)?;
            Ok(TrainedClassifier::Rvfl(train_rvfl_labels(&model, &data.to_matrix(), &data.labels())?))
        }
        ModelSection::Bilstm(b) => {
            let cfg = TrainConfig {
                seq_len: seq_len.or(b.train.seq_len),
                ..b.train.clone()
            };
            Ok(TrainedClassifier::Bilstm {
                model: train_bilstm(data, &cfg)?,
                threshold: b.threshold,
            })
        }
    }
}

fn audit_no_leakage(embedder_ids: &[u64], test_ids: &[u64]) -> Result<()> {
    let test: HashSet<u64> = test_ids.iter().copied().collect();
    if let Some(id) = embedder_ids.iter().find(|id| test.contains(id)) {
        return Err(Error::Model(format!(
            "test gadget {id} reached the embedder training stream"
        )));
    }
    Ok(())
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvaluationReport,
    pub embedding: EmbeddingModel,
    pub classifier: TrainedClassifier,
    pub train_features: FeatureDataset,
    pub test_features: FeatureDataset,
}

pub fn run_experiment(cfg: &PipelineConfig) -> Result<ExperimentOutcome> {
    cfg.validate().stage("config")?;
    let corpus = load_corpus(&cfg.corpus).stage("corpus")?;
    run_on_corpus(cfg, &corpus)
}

/// [`run_experiment`] on an already loaded corpus (the config's source is ignored).
pub fn run_on_corpus(cfg: &PipelineConfig, corpus: &Corpus) -> Result<ExperimentOutcome> {
    let (train, test) = split_dataset(corpus, &cfg.split).stage("split")?;
    let lexicon = load_lexicon(cfg.lexicon.as_deref()).stage("symbolize")?;
    let train_sym = symbolize_all(&train, cfg.group, &lexicon).stage("symbolize")?;
    let test_sym = symbolize_all(&test, cfg.group, &lexicon).stage("symbolize")?;

    let embedder_ids: Vec<u64> = train_sym.iter().map(|g| g.source_id).collect();
    audit_no_leakage(&embedder_ids, &test.ids()).stage("embedding")?;
    let embedding = fit_embedder(&cfg.embedding, &train_sym).stage("embedding")?;

    let train_x = vectorize(&cfg.embedding, &embedding, &train_sym, true).stage("vectorize")?;
    let test_x = vectorize(&cfg.embedding, &embedding, &test_sym, false).stage("vectorize")?;
    let expected = cfg.embedding.feature_len();
    for d in [&train_x, &test_x] {
        if d.dim() != expected {
            return Err(Error::shape(format!(
                "features have length {}, configuration implies {expected}",
                d.dim()
            )))
            .stage("vectorize");
        }
    }

    let start = Instant::now();
    let classifier = train_classifier(&cfg.model, cfg.bilstm_seq_len(), &train_x).stage("train")?;
    let training_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let predicted = classifier.predict(&test_x).stage("detect")?;
    let detection_time = start.elapsed().as_secs_f64();

    let counts = ConfusionCounts::from_predictions(&test_x.labels(), &predicted).stage("metrics")?;
    let report = EvaluationReport::from_counts(
        cfg.display_label(),
        cfg.group,
        expected,
        counts,
        (training_time, detection_time),
        (train_x.len(), test_x.len()),
    );
    Ok(ExperimentOutcome {
        report,
        embedding,
        classifier,
        train_features: train_x,
        test_features: test_x,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reports: Vec<EvaluationReport>,
    /// Present when word- and document-level embedders are both compared and
    /// some configuration lists `cosine_pairs` (the first such list is used).
    pub cosine: Option<CosineReport>,
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = render_table(&self.reports);
        if let Some(c) = &self.cosine {
            out.push('\n');
            out.push_str(&render_cosine(c));
        }
        out
    }
}

/// Run several configurations over one corpus and split.
pub fn compare_configurations(cfgs: &[PipelineConfig]) -> Result<Comparison> {
    if cfgs.len() < 2 {
        return Err(Error::config("a comparison needs at least two configurations"));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.corpus != first.corpus || c.split != first.split || c.lexicon != first.lexicon {
            return Err(Error::config(
                "compared configurations must share corpus, split and lexicon",
            ));
        }
    }
    let corpus = load_corpus(&first.corpus).stage("corpus")?;
    let reports = cfgs
        .iter()
        .map(|c| {
            c.validate().stage("config")?;
            run_on_corpus(c, &corpus).map(|o| o.report)
        })
        .collect::<Result<Vec<_>>>()?;

    let word = cfgs.iter().find(|c| c.embedding.kind == EmbedderChoice::Word);
    let doc = cfgs.iter().find(|c| c.embedding.kind == EmbedderChoice::Doc);
    let pairs = cfgs
        .iter()
        .map(|c| &c.cosine_pairs)
        .find(|p| !p.is_empty())
        .cloned()
        .unwrap_or_default();
    let cosine = match (word, doc) {
        (Some(w), Some(d)) if !pairs.is_empty() => {
            let lexicon = load_lexicon(first.lexicon.as_deref()).stage("symbolize")?;
            let mut columns = Vec::new();
            for section in [&w.embedding, &d.embedding] {
                columns.push(cosine_pairs(&corpus, &pairs, section, &lexicon).stage("cosine")?);
            }
            let rows = pairs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| CosineRow {
                    a,
                    b,
                    values: columns.iter().map(|col| col[i]).collect(),
                })
                .collect();
            Some(CosineReport {
                embedders: vec!["word2vec".into(), "doc2vec".into()],
                rows,
            })
        }
        _ => None,
    };
    Ok(Comparison { reports, cosine })
}

/// Cosines of gadget pairs under one embedder fitted on the whole corpus
/// symbolized with F+V. Undefined cosines (zero vectors) are `None`.
pub fn cosine_pairs(
    corpus: &Corpus,
    pairs: &[(u64, u64)],
    section: &EmbeddingSection,
    lexicon: &Lexicon,
) -> Result<Vec<Option<f64>>> {
    for &(a, b) in pairs {
        for id in [a, b] {
            if corpus.get(id).is_none() {
                return Err(Error::config(format!("gadget {id} is not in corpus {:?}", corpus.name)));
            }
        }
    }
    let sym = symbolize_all(corpus, SymbolizationGroup::FV, lexicon)?;
    let model = fit_embedder(section, &sym)?;
    let features = vectorize(
        &EmbeddingSection {
            train_features: TrainFeatures::Stored,
            ..section.clone()
        },
        &model,
        &sym,
        true,
    )?;
    let row_of = |id: u64| features.ids().iter().position(|&x| x == id).expect("checked above");
    Ok(pairs
        .iter()
        .map(|&(a, b)| {
            let va = &features.vectors()[row_of(a)].values;
            let vb = &features.vectors()[row_of(b)].values;
            cosine(va, vb).ok()
        })
        .collect())
}

/// Cosine of one pair; errors where [`cosine_pairs`] reports `None`.
pub fn cosine_pair(
    corpus: &Corpus,
    ids: (u64, u64),
    section: &EmbeddingSection,
    lexicon: &Lexicon,
) -> Result<f64> {
    cosine_pairs(corpus, &[ids], section, lexicon)?[0]
        .ok_or_else(|| Error::Numeric("cosine is undefined for a zero vector".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rvfl::RvflConfig;

    fn small(model: ModelSection, kind: EmbedderChoice) -> PipelineConfig {
        let mut emb = EmbeddingSection::new(kind);
        emb.dim = Some(10);
        emb.epochs = Some(2);
        emb.tau = 8;
        PipelineConfig::new(CorpusSource::synthetic(20, 20, 5), SymbolizationGroup::FV, emb, model)
    }

    #[test]
    fn leakage_audit() {
        assert!(audit_no_leakage(&[1, 2, 3], &[4, 5]).is_ok());
        assert!(audit_no_leakage(&[1, 2, 3], &[3]).is_err());
    }

    #[test]
    fn small_run_counts_and_determinism() {
        let cfg = small(ModelSection::Rvfl(RvflConfig::default()), EmbedderChoice::Doc);
        let a = run_experiment(&cfg).unwrap();
        assert_eq!((a.report.train_count, a.report.test_count), (32, 8));
        assert_eq!(a.report.counts.total(), 8);
        assert_eq!(a.report.feature_dim, 10);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.report.without_timings(), b.report.without_timings());
    }

    #[test]
    fn missing_corpus_is_stage_tagged() {
        let mut cfg = small(ModelSection::Rvfl(RvflConfig::default()), EmbedderChoice::Word);
        cfg.corpus = CorpusSource::file("/nonexistent/corpus.txt");
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.stage(), Some("corpus"));
        assert!(err.to_string().starts_with("[corpus]"), "{err}");
    }

    #[test]
    fn comparison_needs_two_matching_configs() {
        let a = small(ModelSection::Rvfl(RvflConfig::default()), EmbedderChoice::Word);
        assert!(compare_configurations(std::slice::from_ref(&a)).is_err());
        let mut b = a.clone();
        b.corpus = CorpusSource::synthetic(5, 5, 1);
        assert!(compare_configurations(&[a, b]).is_err());
    }

    #[test]
    fn self_cosine_is_one_and_unknown_ids_fail() {
        let corpus = generate_synthetic(4, 4, 2);
        let lex = Lexicon::default();
        let mut w = EmbeddingSection::new(EmbedderChoice::Word);
        w.dim = Some(8);
        let c = cosine_pair(&corpus, (3, 3), &w, &lex).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        assert!(cosine_pair(&corpus, (3, 99), &w, &lex).is_err());
    }
}
