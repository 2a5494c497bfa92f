use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backward, bce, dropout_mask, forward_with_mask, init_bilstm, BilstmGradients, BilstmModel, Pooling};
use crate::dataset::{shape_input, FeatureDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    /// RMSProp decay of the squared-gradient average.
    pub rho: f64,
    pub epsilon: f64,
    /// Hidden units per direction.
    pub units: usize,
    /// Timesteps each feature vector is split into; `None` means `dim / 50`.
    pub seq_len: Option<usize>,
    pub pooling: Pooling,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 2,
            dropout: 0.5,
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-8,
            units: 60,
            seq_len: None,
            pooling: Pooling::Final,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.units == 0 || self.seq_len == Some(0) {
            return Err(Error::config(
                "batch size, epochs, units and sequence length must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} is outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.rho) || !(self.epsilon > 0.0) {
            return Err(Error::config("RMSProp needs lr > 0, rho in [0, 1) and epsilon > 0"));
        }
        Ok(())
    }

    /// Timesteps for vectors of length `dim`: the configured value, else 50-wide steps.
    pub fn resolved_seq_len(&self, dim: usize) -> Result<usize> {
        match self.seq_len {
            Some(t) => Ok(t),
            None if dim % 50 == 0 => Ok(dim / 50),
            None => Err(Error::config(format!(
                "no default sequence length for {dim}-dimensional features; set seq_len"
            ))),
        }
    }
}

/// `s ← ρs + (1−ρ)g²`, `θ ← θ − η·g/√(s+ε)`.
struct RmsProp {
    rate: f64,
    rho: f64,
    epsilon: f64,
    squares: Vec<Vec<f64>>,
}

impl RmsProp {
    fn new(cfg: &TrainConfig, grads: &BilstmGradients) -> Self {
        RmsProp {
            rate: cfg.learning_rate,
            rho: cfg.rho,
            epsilon: cfg.epsilon,
            squares: grads.slices().iter().map(|s| vec![0.0; s.len()]).collect(),
        }
    }

    fn step(&mut self, model: &mut BilstmModel, grads: &BilstmGradients) {
        for ((theta, g), s) in model
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(&mut self.squares)
        {
            for ((p, &gv), sv) in theta.iter_mut().zip(g).zip(s.iter_mut()) {
                *sv = self.rho * *sv + (1.0 - self.rho) * gv * gv;
                *p -= self.rate * gv / (*sv + self.epsilon).sqrt();
            }
        }
    }
}

/// Mini-batch training on shuffled batches; the last partial batch is kept.
pub fn train_bilstm(data: &FeatureDataset, cfg: &TrainConfig) -> Result<BilstmModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Model("Bi-LSTM training needs at least one sample".into()));
    }
    let seq_len = cfg.resolved_seq_len(data.dim())?;
    let inputs = data
        .vectors()
        .iter()
        .map(|v| shape_input(&v.values, seq_len))
        .collect::<Result<Vec<_>>>()?;
    let labels = data.labels();
    let feature_dim = data.dim() / seq_len;

    let mut model = init_bilstm(feature_dim, seq_len, cfg.units, cfg.pooling, cfg.seed)?;
    model.dropout_rate = cfg.dropout;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_BA7C);
    let mut grads = BilstmGradients::zeros_like(&model);
    let mut opt = RmsProp::new(cfg, &grads);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let width = 2 * cfg.units;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.scale(0.0);
            for &i in batch {
                let mask = dropout_mask(width, cfg.dropout, &mut rng);
                let cache = forward_with_mask(&model, &inputs[i], Some(mask))?;
                epoch_loss += bce(cache.probability, labels[i]);
                backward(&model, &cache, labels[i], &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            opt.step(&mut model, &grads);
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numeric("Bi-LSTM training loss diverged".into()));
        }
        model.epoch_losses.push(mean);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::dataset::FeatureVector;

    #[test]
    fn config_checks() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { dropout: 1.0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { seq_len: Some(0), ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn default_sequence_length() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.resolved_seq_len(2500).unwrap(), 50);
        assert_eq!(cfg.resolved_seq_len(250).unwrap(), 5);
        assert!(cfg.resolved_seq_len(70).is_err());
        assert_eq!(TrainConfig { seq_len: Some(7), ..cfg }.resolved_seq_len(70).unwrap(), 7);
    }

    #[test]
    fn rmsprop_update_by_hand() {
        let mut m = init_bilstm(1, 1, 1, Pooling::Final, 0).unwrap();
        let before = m.bias;
        let mut g = BilstmGradients::zeros_like(&m);
        g.bias = 0.5;
        let cfg = TrainConfig::default();
        let mut opt = RmsProp::new(&cfg, &g);
        opt.step(&mut m, &g);
        // s = 0.1 · 0.25; step = 0.001 · 0.5 / √(0.025 + 1e-8)
        let expected = before - 0.001 * 0.5 / (0.025f64 + 1e-8).sqrt();
        assert!((m.bias - expected).abs() < 1e-15);
        let w = m.readout.clone();
        let zero = BilstmGradients::zeros_like(&m);
        opt.step(&mut m, &zero);
        assert_eq!(m.readout, w);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let data = FeatureDataset::new(
            7,
            vec![FeatureVector { values: vec![0.0; 7], source_id: 0, label: Label::Safe }],
        )
        .unwrap();
        assert!(train_bilstm(&data, &TrainConfig::default()).is_err());
    }
}
