use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_vocabulary, EmbedderConfig, EmbeddingKind, EmbeddingModel, Vocabulary};
use crate::error::Result;
use crate::linalg::{dot, sigmoid, Matrix};

/// Draws negatives from the unigram distribution raised to the 3/4 power.
pub(super) struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub(super) fn new(vocab: &Vocabulary) -> Self {
        let mut acc = 0.0;
        let cumulative = vocab
            .entries()
            .iter()
            .map(|e| {
                acc += (e.count as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub(super) fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Small uniform initialization, `(-0.5, 0.5) / dim`.
pub(super) fn init_table(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, dim, |_, _| (rng.gen::<f64>() - 0.5) / dim as f64)
}

pub(super) fn decayed_rate(cfg: &EmbedderConfig, progress: f64) -> f64 {
    (cfg.learning_rate * (1.0 - progress)).max(cfg.min_learning_rate)
}

/// One negative-sampling step for input vector `h` against `target`.
///
/// Accumulates the gradient for `h` into `grad` and pushes the pending
/// `(row, coefficient)` context updates; the caller applies `row += coefficient · h`
/// when the context table is being trained. Returns the loss of this step.
#[allow(clippy::too_many_arguments)]
pub(super) fn ns_step(
    h: &[f64],
    target: usize,
    negatives: usize,
    sampler: &NegativeSampler,
    context: &Matrix,
    grad: &mut [f64],
    lr: f64,
    rng: &mut ChaCha8Rng,
    updates: &mut Vec<(usize, f64)>,
) -> f64 {
    let mut loss = 0.0;
    for k in 0..=negatives {
        let (word, positive) = if k == 0 {
            (target, true)
        } else {
            let w = sampler.sample(rng);
            if w == target {
                continue;
            }
            (w, false)
        };
        let out = context.row(word);
        let p = sigmoid(dot(h, out));
        let (label, likelihood) = if positive { (1.0, p) } else { (0.0, 1.0 - p) };
        loss -= likelihood.max(1e-12).ln();
        let g = (label - p) * lr;
        for (gr, o) in grad.iter_mut().zip(out) {
            *gr += g * o;
        }
        updates.push((word, g));
    }
    loss
}

pub(super) fn apply_context_updates(context: &mut Matrix, h: &[f64], updates: &mut Vec<(usize, f64)>) {
    for (word, g) in updates.drain(..) {
        for (o, hv) in context.row_mut(word).iter_mut().zip(h) {
            *o += g * hv;
        }
    }
}

/// Skip-gram with negative sampling over the given token sentences.
pub fn train_word_embedder<S: AsRef<str>>(
    corpus: &[Vec<S>],
    cfg: &EmbedderConfig,
) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus, cfg.min_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = cfg.dim;
    let mut words = init_table(vocab.len(), dim, &mut rng);
    let mut context = Matrix::zeros(vocab.len(), dim);
    let sampler = NegativeSampler::new(&vocab);

    let sentences: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let words_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total = (words_per_epoch * cfg.epochs).max(1) as f64;

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];
    let mut updates = Vec::new();
    for _ in 0..cfg.epochs {
        let (mut loss, mut pairs) = (0.0, 0usize);
        for sentence in &sentences {
            for (i, &center) in sentence.iter().enumerate() {
                let lr = decayed_rate(cfg, processed as f64 / total);
                processed += 1;
                let reach = cfg.window - rng.gen_range(0..cfg.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(sentence.len() - 1);
                for (j, &ctx) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let h = words.row(center);
                    loss += ns_step(
                        h,
                        ctx,
                        cfg.negatives,
                        &sampler,
                        &context,
                        &mut grad,
                        lr,
                        &mut rng,
                        &mut updates,
                    );
                    apply_context_updates(&mut context, h, &mut updates);
                    pairs += 1;
                    for (w, g) in words.row_mut(center).iter_mut().zip(&grad) {
                        *w += g;
                    }
                }
            }
        }
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    Ok(EmbeddingModel {
        kind: EmbeddingKind::WordLevel,
        config: cfg.clone(),
        vocab,
        word_vectors: words,
        context_vectors: context,
        doc_vectors: None,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{build_vocabulary, cosine};

    fn toy_corpus() -> Vec<Vec<String>> {
        let mut corpus = Vec::new();
        for i in 0..10 {
            let filler = ["x", "y", "z", "w", "q"];
            let mut s: Vec<String> = vec!["a".into(), "b".into()];
            s.push(filler[i % 5].into());
            s.push(filler[(i + 2) % 5].into());
            s.push("a".into());
            s.push("b".into());
            corpus.push(s);
        }
        corpus
    }

    #[test]
    fn sampler_follows_smoothed_unigram() {
        let vocab = build_vocabulary(&[vec!["a"; 81], vec!["b"; 1]], 1).unwrap();
        let s = NegativeSampler::new(&vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let hits = (0..20_000).filter(|_| s.sample(&mut rng) == 0).count();
        // 81^0.75 = 27, so P(a) = 27/28
        let expected = 27.0 / 28.0;
        assert!((hits as f64 / 20_000.0 - expected).abs() < 0.01);
    }

    #[test]
    fn shape_and_determinism() {
        let cfg = EmbedderConfig { epochs: 3, ..EmbedderConfig::word() };
        let a = train_word_embedder(&toy_corpus(), &cfg).unwrap();
        let b = train_word_embedder(&toy_corpus(), &cfg).unwrap();
        assert_eq!(a.word_vectors.shape(), (a.vocab.len(), 50));
        assert!(a.doc_vectors.is_none());
        assert_eq!(a, b);
        a.validate().unwrap();
    }

    #[test]
    fn co_occurring_tokens_align() {
        let cfg = EmbedderConfig { dim: 16, epochs: 50, ..EmbedderConfig::word() };
        let m = train_word_embedder(&toy_corpus(), &cfg).unwrap();
        let a = m.word_vector("a").unwrap();
        let b = m.word_vector("b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let random: Vec<f64> = (0..16).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ab = cosine(a, b).unwrap();
        let ar = cosine(a, &random).unwrap();
        assert!(ab > ar, "cos(a,b)={ab} cos(a,random)={ar}");
    }

    #[test]
    fn loss_falls_below_first_epoch() {
        let cfg = EmbedderConfig { dim: 16, epochs: 20, ..EmbedderConfig::word() };
        let m = train_word_embedder(&toy_corpus(), &cfg).unwrap();
        let first = m.epoch_losses[0];
        assert!(m.epoch_losses[1..].iter().all(|&l| l <= first), "{:?}", m.epoch_losses);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = EmbedderConfig { dim: 0, ..EmbedderConfig::word() };
        assert!(train_word_embedder(&toy_corpus(), &cfg).is_err());
        let cfg = EmbedderConfig { epochs: 0, ..EmbedderConfig::word() };
        assert!(train_word_embedder(&toy_corpus(), &cfg).is_err());
        let empty: Vec<Vec<String>> = vec![];
        assert!(train_word_embedder(&empty, &EmbedderConfig::word()).is_err());
    }
}
