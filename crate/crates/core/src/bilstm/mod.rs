//! Bidirectional LSTM binary classifier.
//!
//! A feature vector is reshaped into `seq_len` timesteps. One LSTM reads the
//! steps in order and a second one reads them reversed; their final hidden
//! states (or, with [`Pooling::Mean`], their time-averaged states) are
//! concatenated, passed through inverted dropout while training, and mapped
//! to a vulnerability probability by a sigmoid readout. Training minimizes
//! binary cross-entropy by backpropagation through time with RMSProp.

mod lstm;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use lstm::{lstm_forward, Gate, LstmDirectionParams};
pub use train::{train_bilstm, TrainConfig};

use crate::corpus::Label;
use crate::dataset::{shape_input, FeatureDataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Last hidden state of each direction.
    #[default]
    Final,
    /// Mean of each direction's hidden states over time.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilstmModel {
    pub forward: LstmDirectionParams,
    pub backward: LstmDirectionParams,
    /// Length `2u`: the first half weighs the forward direction.
    pub readout: Vec<f64>,
    pub bias: f64,
    pub dropout_rate: f64,
    pub seq_len: usize,
    pub feature_dim: usize,
    pub pooling: Pooling,
    pub seed: u64,
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl BilstmModel {
    pub fn units(&self) -> usize {
        self.forward.units()
    }

    pub fn validate(&self) -> Result<()> {
        self.forward.check_shapes()?;
        self.backward.check_shapes()?;
        let u = self.units();
        if self.backward.units() != u
            || self.forward.input_dim() != self.feature_dim
            || self.backward.input_dim() != self.feature_dim
            || self.readout.len() != 2 * u
        {
            return Err(Error::Format("Bi-LSTM component shapes disagree".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) || self.seq_len == 0 {
            return Err(Error::Format("Bi-LSTM dropout or sequence length out of range".into()));
        }
        if !self.bias.is_finite() || self.readout.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite readout parameter".into()));
        }
        Ok(())
    }

    /// All trainable parameters flattened, in the order of [`BilstmGradients::to_flat`].
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.forward.slices().into_iter().flatten().copied().collect();
        v.extend(self.backward.slices().into_iter().flatten());
        v.extend(&self.readout);
        v.push(self.bias);
        v
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total: usize = self.slices_mut().iter().map(|s| s.len()).sum();
        if values.len() != total {
            return Err(Error::shape(format!(
                "model has {total} parameters, got {}",
                values.len()
            )));
        }
        let mut rest = values;
        for s in self.slices_mut() {
            let (head, tail) = rest.split_at(s.len());
            s.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Every trainable parameter, in a fixed order shared with [`BilstmGradients`].
    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.forward.slices_mut();
        v.extend(self.backward.slices_mut());
        v.push(&mut self.readout);
        v.push(std::slice::from_mut(&mut self.bias));
        v
    }
}

/// Gradient of the loss with respect to every parameter of a [`BilstmModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct BilstmGradients {
    pub forward: LstmDirectionParams,
    pub backward: LstmDirectionParams,
    pub readout: Vec<f64>,
    pub bias: f64,
}

impl BilstmGradients {
    pub fn zeros_like(model: &BilstmModel) -> Self {
        let (d, u) = (model.feature_dim, model.units());
        BilstmGradients {
            forward: LstmDirectionParams::zeros(d, u),
            backward: LstmDirectionParams::zeros(d, u),
            readout: vec![0.0; 2 * u],
            bias: 0.0,
        }
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.forward.slices();
        v.extend(self.backward.slices());
        v.push(&self.readout);
        v.push(std::slice::from_ref(&self.bias));
        v
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.forward.slices_mut();
        v.extend(self.backward.slices_mut());
        v.push(&mut self.readout);
        v.push(std::slice::from_mut(&mut self.bias));
        v
    }

    pub fn scale(&mut self, c: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Flattened in parameter order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().into_iter().flatten().copied().collect()
    }
}

/// Fresh model with uniform `±1/√fan_in` weights drawn from `seed`.
/// `feature_dim` is the width of one timestep, not of the whole vector.
pub fn init_bilstm(
    feature_dim: usize,
    seq_len: usize,
    units: usize,
    pooling: Pooling,
    seed: u64,
) -> Result<BilstmModel> {
    if feature_dim == 0 || seq_len == 0 || units == 0 {
        return Err(Error::config("Bi-LSTM dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forward = LstmDirectionParams::init(feature_dim, units, &mut rng);
    let backward = LstmDirectionParams::init(feature_dim, units, &mut rng);
    let bound = 1.0 / ((2 * units) as f64).sqrt();
    let readout = (0..2 * units).map(|_| rng.gen_range(-bound..bound)).collect();
    Ok(BilstmModel {
        forward,
        backward,
        readout,
        bias: 0.0,
        dropout_rate: 0.5,
        seq_len,
        feature_dim,
        pooling,
        seed,
        epoch_losses: Vec::new(),
    })
}

/// Intermediate values of one bidirectional pass.
pub struct ForwardCache {
    x: Matrix,
    reversed: Matrix,
    fwd: Vec<lstm::Step>,
    bwd: Vec<lstm::Step>,
    /// Concatenated direction summaries before dropout.
    pub features: Vec<f64>,
    /// Inverted-dropout multipliers, all ones at inference.
    pub mask: Vec<f64>,
    pub probability: f64,
}

impl ForwardCache {
    /// Hidden states of the backward direction in its own (reversed) time order.
    pub fn backward_states(&self) -> Vec<Vec<f64>> {
        self.bwd.iter().map(|s| s.h.clone()).collect()
    }

    pub fn forward_states(&self) -> Vec<Vec<f64>> {
        self.fwd.iter().map(|s| s.h.clone()).collect()
    }

    /// The readout input `features ⊙ mask`.
    pub fn readout_input(&self) -> Vec<f64> {
        self.features.iter().zip(&self.mask).map(|(a, b)| a * b).collect()
    }
}

/// Inverted dropout multipliers: `1/(1-p)` with probability `1-p`, else 0.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

fn summarize(steps: &[lstm::Step], pooling: Pooling, out: &mut Vec<f64>) {
    match pooling {
        Pooling::Final => out.extend_from_slice(&steps[steps.len() - 1].h),
        Pooling::Mean => {
            let u = steps[0].h.len();
            let inv = 1.0 / steps.len() as f64;
            out.extend((0..u).map(|k| steps.iter().map(|s| s.h[k]).sum::<f64>() * inv));
        }
    }
}

fn reverse_rows(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |r, c| x.get(x.rows() - 1 - r, c))
}

pub(crate) fn forward_with_mask(
    model: &BilstmModel,
    x: &Matrix,
    mask: Option<Vec<f64>>,
) -> Result<ForwardCache> {
    if x.rows() == 0 {
        return Err(Error::shape("Bi-LSTM input has no timesteps"));
    }
    let reversed = reverse_rows(x);
    let fwd = lstm::run(&model.forward, x)?;
    let bwd = lstm::run(&model.backward, &reversed)?;
    let u = model.units();
    let mut features = Vec::with_capacity(2 * u);
    summarize(&fwd, model.pooling, &mut features);
    summarize(&bwd, model.pooling, &mut features);
    let mask = mask.unwrap_or_else(|| vec![1.0; 2 * u]);
    let dropped: Vec<f64> = features.iter().zip(&mask).map(|(a, b)| a * b).collect();
    // the two halves are summed separately so that swapping directions is exact
    let logit = dot(&model.readout[..u], &dropped[..u])
        + dot(&model.readout[u..], &dropped[u..])
        + model.bias;
    Ok(ForwardCache {
        x: x.clone(),
        reversed,
        fwd,
        bwd,
        features,
        mask,
        probability: sigmoid(logit),
    })
}

/// Bidirectional pass over a `T × d_in` input. Dropout is applied only when
/// `train_mode` is set, with its mask drawn from `seed`.
pub fn bilstm_forward(
    model: &BilstmModel,
    x: &Matrix,
    train_mode: bool,
    seed: u64,
) -> Result<(f64, ForwardCache)> {
    let mask = train_mode.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        dropout_mask(2 * model.units(), model.dropout_rate, &mut rng)
    });
    let cache = forward_with_mask(model, x, mask)?;
    Ok((cache.probability, cache))
}

/// Binary cross-entropy of one prediction.
pub fn bce(probability: f64, label: Label) -> f64 {
    let p = probability.clamp(1e-12, 1.0 - 1e-12);
    if label.is_vulnerable() {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Add the cross-entropy gradient of one cached pass into `grads`.
pub fn backward(model: &BilstmModel, cache: &ForwardCache, label: Label, grads: &mut BilstmGradients) {
    let u = model.units();
    let y = if label.is_vulnerable() { 1.0 } else { 0.0 };
    let dlogit = cache.probability - y;
    grads.bias += dlogit;
    for (k, g) in grads.readout.iter_mut().enumerate() {
        *g += dlogit * cache.features[k] * cache.mask[k];
    }
    let dfeat: Vec<f64> = (0..2 * u)
        .map(|k| dlogit * model.readout[k] * cache.mask[k])
        .collect();
    let t = cache.fwd.len();
    let spread = |half: &[f64]| -> Vec<Vec<f64>> {
        match model.pooling {
            Pooling::Final => {
                let mut dh = vec![vec![0.0; u]; t];
                dh[t - 1].copy_from_slice(half);
                dh
            }
            Pooling::Mean => {
                let each: Vec<f64> = half.iter().map(|v| v / t as f64).collect();
                vec![each; t]
            }
        }
    };
    lstm::backprop(&model.forward, &cache.x, &cache.fwd, &spread(&dfeat[..u]), &mut grads.forward);
    lstm::backprop(
        &model.backward,
        &cache.reversed,
        &cache.bwd,
        &spread(&dfeat[u..]),
        &mut grads.backward,
    );
}

/// Loss and exact gradient for one sequence under a fixed dropout mask
/// (`None` disables dropout).
pub fn loss_and_gradients(
    model: &BilstmModel,
    x: &Matrix,
    label: Label,
    mask: Option<Vec<f64>>,
) -> Result<(f64, BilstmGradients)> {
    let cache = forward_with_mask(model, x, mask)?;
    let mut grads = BilstmGradients::zeros_like(model);
    backward(model, &cache, label, &mut grads);
    Ok((bce(cache.probability, label), grads))
}

fn check_vector(model: &BilstmModel, values: &[f64]) -> Result<Matrix> {
    let x = shape_input(values, model.seq_len)?;
    if x.cols() != model.feature_dim {
        return Err(Error::shape(format!(
            "Bi-LSTM expects {} values ({}×{}), got {}",
            model.seq_len * model.feature_dim,
            model.seq_len,
            model.feature_dim,
            values.len()
        )));
    }
    Ok(x)
}

/// Label 1 iff the probability reaches `threshold`.
pub fn predict_bilstm(model: &BilstmModel, values: &[f64], threshold: f64) -> Result<(Label, f64)> {
    let x = check_vector(model, values)?;
    let p = forward_with_mask(model, &x, None)?.probability;
    Ok((decide(p, threshold), p))
}

pub fn predict_bilstm_batch(
    model: &BilstmModel,
    data: &FeatureDataset,
    threshold: f64,
) -> Result<Vec<(Label, f64)>> {
    data.vectors()
        .iter()
        .map(|v| predict_bilstm(model, &v.values, threshold))
        .collect()
}

fn decide(probability: f64, threshold: f64) -> Label {
    Label::from(probability >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(t: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(t, d, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(decide(0.7, 0.5), Label::Vulnerable);
        assert_eq!(decide(0.5, 0.5), Label::Vulnerable);
        assert_eq!(decide(0.999, 1.0), Label::Safe);
        assert_eq!(decide(0.2, 0.5), Label::Safe);
    }

    #[test]
    fn backward_direction_reads_reversed_input() {
        let m = init_bilstm(3, 4, 5, Pooling::Final, 2).unwrap();
        let x = random_input(4, 3, 1);
        let (_, cache) = bilstm_forward(&m, &x, false, 0).unwrap();
        assert_eq!(cache.backward_states(), lstm_forward(&m.backward, &reverse_rows(&x)).unwrap());
        assert_eq!(cache.forward_states(), lstm_forward(&m.forward, &x).unwrap());
    }

    #[test]
    fn inference_ignores_dropout_seed() {
        let m = init_bilstm(3, 4, 5, Pooling::Final, 2).unwrap();
        let x = random_input(4, 3, 1);
        let a = bilstm_forward(&m, &x, false, 1).unwrap().0;
        let b = bilstm_forward(&m, &x, false, 99).unwrap().0;
        assert_eq!(a, b);
        let c = bilstm_forward(&m, &x, true, 1).unwrap().0;
        let d = bilstm_forward(&m, &x, true, 1).unwrap().0;
        assert_eq!(c, d);
    }

    #[test]
    fn output_is_a_probability() {
        let m = init_bilstm(3, 4, 5, Pooling::Mean, 7).unwrap();
        for s in 0..100 {
            let mut x = random_input(4, 3, s);
            x.as_mut_slice().iter_mut().for_each(|v| *v *= 10.0);
            let p = bilstm_forward(&m, &x, s % 2 == 0, s).unwrap().0;
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn direction_swap_is_exact() {
        for pooling in [Pooling::Final, Pooling::Mean] {
            let m = init_bilstm(3, 4, 5, pooling, 11).unwrap();
            let mut swapped = m.clone();
            std::mem::swap(&mut swapped.forward, &mut swapped.backward);
            let u = m.units();
            swapped.readout = [&m.readout[u..], &m.readout[..u]].concat();
            let x = random_input(4, 3, 5);
            let p = bilstm_forward(&m, &x, false, 0).unwrap().0;
            let q = bilstm_forward(&swapped, &reverse_rows(&x), false, 0).unwrap().0;
            assert_eq!(p, q);
        }
    }

    #[test]
    fn dropout_preserves_expectation() {
        let m = init_bilstm(3, 4, 5, Pooling::Final, 3).unwrap();
        let x = random_input(4, 3, 8);
        let clean = forward_with_mask(&m, &x, None).unwrap().features;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 10_000;
        let mut mean = vec![0.0; clean.len()];
        for _ in 0..draws {
            let mask = dropout_mask(clean.len(), 0.5, &mut rng);
            for (acc, (f, k)) in mean.iter_mut().zip(clean.iter().zip(&mask)) {
                *acc += f * k / draws as f64;
            }
        }
        // at p = 0.5 the sample mean has a relative standard deviation of 1%
        let rel: Vec<f64> = mean.iter().zip(&clean).map(|(mu, c)| (mu - c).abs() / c.abs()).collect();
        let avg = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!(avg <= 0.02, "mean relative deviation {avg}");
        assert!(rel.iter().all(|&r| r <= 0.05), "{rel:?}");
    }

    #[test]
    fn prediction_checks_shape() {
        let m = init_bilstm(50, 5, 4, Pooling::Final, 0).unwrap();
        assert!(predict_bilstm(&m, &[0.0; 250], 0.5).is_ok());
        assert!(predict_bilstm(&m, &[0.0; 252], 0.5).is_err());
        assert!(predict_bilstm(&m, &[0.0; 255], 0.5).is_err());
    }
}
