use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sgns::{apply_context_updates, decayed_rate, init_table, ns_step, NegativeSampler};
use super::{build_vocabulary, EmbedderConfig, EmbeddingKind, EmbeddingModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Mean of the document vector and the context word vectors around `i`, written
/// into `h`; the context word indices are left in `ctx`.
fn mean_input(
    doc: &[f64],
    words: &Matrix,
    sentence: &[usize],
    i: usize,
    reach: usize,
    h: &mut [f64],
    ctx: &mut Vec<usize>,
) {
    ctx.clear();
    let lo = i.saturating_sub(reach);
    let hi = (i + reach).min(sentence.len() - 1);
    for (j, &w) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
        if j != i {
            ctx.push(w);
        }
    }
    h.copy_from_slice(doc);
    for &w in ctx.iter() {
        for (hv, wv) in h.iter_mut().zip(words.row(w)) {
            *hv += wv;
        }
    }
    let inv = 1.0 / (1 + ctx.len()) as f64;
    h.iter_mut().for_each(|v| *v *= inv);
}

/// Distributed-memory paragraph vectors with context averaging.
pub fn train_doc_embedder<S: AsRef<str>>(
    corpus: &[Vec<S>],
    cfg: &EmbedderConfig,
) -> Result<EmbeddingModel> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::Model("document embedder needs at least one document".into()));
    }
    let vocab = build_vocabulary(corpus, cfg.min_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim;
    let mut words = init_table(vocab.len(), dim, &mut rng);
    let mut docs = init_table(corpus.len(), dim, &mut rng);
    let mut context = Matrix::zeros(vocab.len(), dim);
    let sampler = NegativeSampler::new(&vocab);

    let sentences: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let words_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total = (words_per_epoch * cfg.epochs).max(1) as f64;

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut processed = 0usize;
    let mut h = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut ctx = Vec::new();
    let mut updates = Vec::new();
    for _ in 0..cfg.epochs {
        let (mut loss, mut steps) = (0.0, 0usize);
        for (d, sentence) in sentences.iter().enumerate() {
            for (i, &target) in sentence.iter().enumerate() {
                let lr = decayed_rate(cfg, processed as f64 / total);
                processed += 1;
                let reach = cfg.window - rng.gen_range(0..cfg.window);
                mean_input(docs.row(d), &words, sentence, i, reach, &mut h, &mut ctx);
                grad.iter_mut().for_each(|g| *g = 0.0);
                loss += ns_step(
                    &h,
                    target,
                    cfg.negatives,
                    &sampler,
                    &context,
                    &mut grad,
                    lr,
                    &mut rng,
                    &mut updates,
                );
                apply_context_updates(&mut context, &h, &mut updates);
                steps += 1;
                let share = 1.0 / (1 + ctx.len()) as f64;
                for (v, g) in docs.row_mut(d).iter_mut().zip(&grad) {
                    *v += g * share;
                }
                for &w in &ctx {
                    for (v, g) in words.row_mut(w).iter_mut().zip(&grad) {
                        *v += g * share;
                    }
                }
            }
        }
        epoch_losses.push(if steps == 0 { 0.0 } else { loss / steps as f64 });
    }

    Ok(EmbeddingModel {
        kind: EmbeddingKind::DocumentLevel,
        config: cfg.clone(),
        vocab,
        word_vectors: words,
        context_vectors: context,
        doc_vectors: Some(docs),
        epoch_losses,
    })
}

/// Fit a fresh document vector for `tokens` with the word and context tables frozen.
///
/// Each step is one pass over the tokens; the learning rate decays linearly across
/// the steps. With `steps == 0` the seeded initialization is returned unchanged.
pub fn infer_doc_vector<S: AsRef<str>>(
    tokens: &[S],
    model: &EmbeddingModel,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    model.require(EmbeddingKind::DocumentLevel)?;
    if tokens.is_empty() {
        return Err(Error::Model("cannot infer a vector for an empty document".into()));
    }
    let cfg = &model.config;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc: Vec<f64> = (0..dim).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect();
    let sentence = model.vocab.encode(tokens);
    if sentence.is_empty() {
        return Ok(doc);
    }

    let sampler = NegativeSampler::new(&model.vocab);
    let mut updates = Vec::new();
    let mut h = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut ctx = Vec::new();
    for step in 0..steps {
        let lr = decayed_rate(cfg, step as f64 / steps as f64);
        for (i, &target) in sentence.iter().enumerate() {
            let reach = cfg.window - rng.gen_range(0..cfg.window);
            mean_input(&doc, &model.word_vectors, &sentence, i, reach, &mut h, &mut ctx);
            grad.iter_mut().for_each(|g| *g = 0.0);
            ns_step(
                &h,
                target,
                cfg.negatives,
                &sampler,
                &model.context_vectors,
                &mut grad,
                lr,
                &mut rng,
                &mut updates,
            );
            updates.clear();
            let share = 1.0 / (1 + ctx.len()) as f64;
            for (v, g) in doc.iter_mut().zip(&grad) {
                *v += g * share;
            }
        }
    }
    Ok(doc)
}
