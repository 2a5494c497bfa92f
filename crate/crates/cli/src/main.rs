use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gadget_detect::bilstm::{train_bilstm, TrainConfig};
use gadget_detect::corpus::Corpus;
use gadget_detect::dataset::FeatureDataset;
use gadget_detect::embedding::{cosine, train_doc_embedder, train_word_embedder, EmbedderConfig, EmbeddingKind};
use gadget_detect::error::Error;
use gadget_detect::metrics::ConfusionCounts;
use gadget_detect::model_io::{self, SavedModel};
use gadget_detect::pipeline::{
    compare_configurations, load_lexicon, render_table, run_experiment, vectorize, EmbedderChoice,
    EmbeddingSection, EvaluationReport, PipelineConfig, TrainedClassifier,
};
use gadget_detect::rvfl::{init_rvfl_with, train_rvfl_labels, RvflConfig};
use gadget_detect::synthetic::generate_synthetic;
use gadget_detect::symbolizer::{symbolize_corpus, tokenize, SymbolizationGroup, SymbolizedGadget};

#[derive(Parser)]
#[command(name = "gadget-detect", version, about = "Source-level vulnerability detection on code gadgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Word,
    Doc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    Bilstm,
    Rvfl,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus of labeled gadgets.
    Synthesize {
        #[arg(long)]
        vulnerable: usize,
        #[arg(long)]
        safe: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        output: PathBuf,
    },
    /// Rename functions, variables and types of every gadget in a corpus file.
    Symbolize {
        #[arg(long, default_value = "FV")]
        group: SymbolizationGroup,
        /// Extra lexicon entries (extends the bundled lexicon).
        #[arg(long)]
        lexicon: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Fit a word- or document-level embedder on a (symbolized) corpus.
    TrainEmbedding {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        corpus: PathBuf,
        output: PathBuf,
    },
    /// Turn a corpus into fixed-length feature vectors with a trained embedder.
    Vectorize {
        #[arg(long)]
        embedding: PathBuf,
        /// Tokens kept per gadget for word-level vectors.
        #[arg(long, default_value_t = 50)]
        tau: usize,
        /// Inference passes for document vectors (default: the embedder's epochs).
        #[arg(long)]
        infer_steps: Option<usize>,
        corpus: PathBuf,
        output: PathBuf,
    },
    /// Train a classifier on a feature file.
    Train {
        #[arg(long, value_enum)]
        model: ModelChoice,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        units: Option<usize>,
        /// Bi-LSTM time steps (default: feature length / 50).
        #[arg(long)]
        seq_len: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        features: PathBuf,
        output: PathBuf,
    },
    /// Score a trained classifier on a feature file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Group shown in the report.
        #[arg(long, default_value = "FV")]
        group: SymbolizationGroup,
        #[arg(long)]
        json: Option<PathBuf>,
        features: PathBuf,
    },
    /// Cosine similarity of two gadgets under a trained embedder.
    Cosine {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, default_value_t = 50)]
        tau: usize,
        corpus: PathBuf,
    },
    /// Run one configuration end to end.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run several configurations on the same corpus and split.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn tagged<T>(stage: &'static str, r: gadget_detect::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.in_stage(stage)))
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    tagged("corpus", Corpus::read(path))
}

/// Tokens of an already symbolized corpus, as the embedder sees them.
fn corpus_tokens(corpus: &Corpus) -> Result<Vec<SymbolizedGadget>> {
    corpus
        .gadgets
        .iter()
        .map(|g| {
            let tokens = tagged("symbolize", tokenize(g))?;
            Ok(SymbolizedGadget {
                source_id: g.id,
                label: g.label,
                tokens,
                line_count: g.lines.len(),
                symbol_map: Default::default(),
            })
        })
        .collect()
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn embedding_section(model: &gadget_detect::embedding::EmbeddingModel, tau: usize, steps: Option<usize>) -> EmbeddingSection {
    let kind = match model.kind {
        EmbeddingKind::WordLevel => EmbedderChoice::Word,
        EmbeddingKind::DocumentLevel => EmbedderChoice::Doc,
    };
    let mut s = EmbeddingSection::new(kind);
    s.dim = Some(model.dim());
    s.tau = tau;
    s.epochs = Some(model.config.epochs);
    s.infer_steps = steps;
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize { vulnerable, safe, seed, output } => {
            let corpus = generate_synthetic(vulnerable, safe, seed);
            tagged("corpus", corpus.write(&output))?;
            println!("wrote {} gadgets to {}", corpus.len(), output.display());
        }
        Command::Symbolize { group, lexicon, input, output } => {
            let corpus = read_corpus(&input)?;
            let lexicon = tagged("symbolize", load_lexicon(lexicon.as_deref()))?;
            let out = tagged("symbolize", symbolize_corpus(&corpus, group, &lexicon))?;
            tagged("symbolize", out.write(&output))?;
            println!("symbolized {} gadgets with {}", out.len(), group.label());
        }
        Command::TrainEmbedding { kind, dim, window, negatives, epochs, seed, corpus, output } => {
            let corpus = read_corpus(&corpus)?;
            let docs: Vec<Vec<String>> = corpus_tokens(&corpus)?.iter().map(|g| g.token_texts()).collect();
            let base = match kind {
                Kind::Word => EmbedderConfig::word(),
                Kind::Doc => EmbedderConfig::doc(),
            };
            let cfg = EmbedderConfig {
                dim: dim.unwrap_or(base.dim),
                window: window.unwrap_or(base.window),
                negatives: negatives.unwrap_or(base.negatives),
                epochs: epochs.unwrap_or(base.epochs),
                seed,
                ..base
            };
            let model = tagged(
                "embedding",
                match kind {
                    Kind::Word => train_word_embedder(&docs, &cfg),
                    Kind::Doc => train_doc_embedder(&docs, &cfg),
                },
            )?;
            let vocab = model.vocab.len();
            tagged("embedding", model_io::save(&output, &SavedModel::Embedding(model)))?;
            println!("trained {}-dimensional embedder over {vocab} tokens", cfg.dim);
        }
        Command::Vectorize { embedding, tau, infer_steps, corpus, output } => {
            let model = tagged("embedding", model_io::load(&embedding).and_then(SavedModel::into_embedding))?;
            let corpus = read_corpus(&corpus)?;
            let gadgets = corpus_tokens(&corpus)?;
            let section = embedding_section(&model, tau, infer_steps);
            let data = tagged("vectorize", vectorize(&section, &model, &gadgets, false))?;
            tagged("vectorize", data.write(&output))?;
            println!("wrote {} vectors of length {}", data.len(), data.dim());
        }
        Command::Train {
            model,
            hidden,
            lambda,
            batch,
            epochs,
            dropout,
            lr,
            units,
            seq_len,
            seed,
            features,
            output,
        } => {
            let data = tagged("vectorize", FeatureDataset::read(&features))?;
            let start = Instant::now();
            let saved = match model {
                ModelChoice::Rvfl => {
                    if batch.is_some() || epochs.is_some() || dropout.is_some() || lr.is_some() {
                        bail!("[train] --batch, --epochs, --dropout and --lr apply to the Bi-LSTM only");
                    }
                    let d = RvflConfig::default();
                    let cfg = RvflConfig {
                        hidden_count: hidden.unwrap_or(d.hidden_count),
                        lambda: lambda.unwrap_or(d.lambda),
                        seed,
                        ..d
                    };
                    let init = tagged("train", init_rvfl_with(data.dim(), &cfg))?;
                    let m = tagged("train", train_rvfl_labels(&init, &data.to_matrix(), &data.labels()))?;
                    SavedModel::Rvfl(m)
                }
                ModelChoice::Bilstm => {
                    if hidden.is_some() || lambda.is_some() {
                        bail!("[train] --hidden and --lambda apply to the RVFL only");
                    }
                    let d = TrainConfig::default();
                    let cfg = TrainConfig {
                        batch_size: batch.unwrap_or(d.batch_size),
                        epochs: epochs.unwrap_or(d.epochs),
                        dropout: dropout.unwrap_or(d.dropout),
                        learning_rate: lr.unwrap_or(d.learning_rate),
                        units: units.unwrap_or(d.units),
                        seq_len,
                        seed,
                        ..d
                    };
                    SavedModel::Bilstm(tagged("train", train_bilstm(&data, &cfg))?)
                }
            };
            let secs = start.elapsed().as_secs_f64();
            tagged("train", model_io::save(&output, &saved))?;
            println!("trained on {} vectors in {secs:.3}s", data.len());
        }
        Command::Evaluate { model, threshold, group, json, features } => {
            let data = tagged("vectorize", FeatureDataset::read(&features))?;
            let (label, classifier) = match tagged("detect", model_io::load(&model))? {
                SavedModel::Rvfl(m) => ("R", TrainedClassifier::Rvfl(m)),
                SavedModel::Bilstm(m) => ("B", TrainedClassifier::Bilstm { model: m, threshold }),
                SavedModel::Embedding(_) => {
                    return Err(Error::Model("expected a classifier, found an embedding model".into()))
                        .map_err(|e| anyhow::Error::new(e.in_stage("detect")))
                }
            };
            let start = Instant::now();
            let predicted = tagged("detect", classifier.predict(&data))?;
            let secs = start.elapsed().as_secs_f64();
            let counts = tagged("metrics", ConfusionCounts::from_predictions(&data.labels(), &predicted))?;
            let report = EvaluationReport::from_counts(label.into(), group, data.dim(), counts, (0.0, secs), (0, data.len()));
            print!("{}", render_table(std::slice::from_ref(&report)));
            if let Some(path) = json {
                write_json(&path, &report)?;
            }
        }
        Command::Cosine { a, b, embedding, tau, corpus } => {
            let model = tagged("embedding", model_io::load(&embedding).and_then(SavedModel::into_embedding))?;
            let corpus = read_corpus(&corpus)?;
            let mut picked = Vec::new();
            for id in [a, b] {
                let g = corpus
                    .get(id)
                    .ok_or_else(|| Error::Config(format!("gadget {id} is not in the corpus")))
                    .map_err(|e| anyhow::Error::new(e.in_stage("cosine")))?;
                picked.push(g.clone());
            }
            let gadgets = corpus_tokens(&Corpus::new(corpus.name.clone(), picked))?;
            let section = embedding_section(&model, tau, None);
            let data = tagged("vectorize", vectorize(&section, &model, &gadgets, false))?;
            let v = data.vectors();
            let c = tagged("cosine", cosine(&v[0].values, &v[1].values))?;
            println!("{c:.6}");
        }
        Command::Experiment { config, json } => {
            let cfg = tagged("config", PipelineConfig::read(&config))?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", render_table(std::slice::from_ref(&outcome.report)));
            if let Some(path) = json.or(cfg.output.clone()) {
                write_json(&path, &outcome.report)?;
            }
        }
        Command::Compare { configs, json } => {
            let cfgs = configs
                .iter()
                .map(|p| tagged("config", PipelineConfig::read(p)))
                .collect::<Result<Vec<_>>>()?;
            let cmp = compare_configurations(&cfgs)?;
            print!("{}", cmp.render());
            if let Some(path) = json {
                write_json(&path, &serde_json::json!({ "reports": cmp.reports, "cosine": cmp.cosine }))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<Error>() {
                Some(inner) => eprintln!("error: {inner}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
