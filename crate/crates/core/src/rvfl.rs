//! Random vector functional link classifier.
//!
//! The input-to-hidden weights `W` and biases `b` are drawn once from the seed
//! and never trained. Only the output weights are fitted, in closed form, by
//! ridge regression on one-hot targets:
//!
//! ```text
//! H    = [X | sigmoid(X W + b)]
//! beta = (HᵀH + λI)⁻¹ HᵀY
//! ```
//!
//! ```
//! use gadget_detect::corpus::Label;
//! use gadget_detect::linalg::Matrix;
//! use gadget_detect::rvfl::{init_rvfl, one_hot, predict_rvfl, train_rvfl};
//!
//! let x = Matrix::from_vec(4, 1, vec![-2.0, -1.0, 1.0, 2.0]).unwrap();
//! let labels = [Label::Safe, Label::Safe, Label::Vulnerable, Label::Vulnerable];
//! let model = init_rvfl(1, 8, 3).unwrap();
//! let model = train_rvfl(&model, &x, &one_hot(&labels), 1e-6).unwrap();
//! assert_eq!(predict_rvfl(&model, &[1.5]).unwrap().0, Label::Vulnerable);
//! ```

use nalgebra::DMatrix;
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};

pub const DEFAULT_HIDDEN: usize = 120;
pub const DEFAULT_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RvflConfig {
    pub hidden_count: usize,
    pub lambda: f64,
    /// Feed the raw inputs straight to the output layer next to the hidden units.
    pub direct_links: bool,
    pub seed: u64,
}

impl Default for RvflConfig {
    fn default() -> Self {
        RvflConfig {
            hidden_count: DEFAULT_HIDDEN,
            lambda: DEFAULT_LAMBDA,
            direct_links: true,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvflModel {
    pub input_dim: usize,
    pub hidden_count: usize,
    pub direct_links: bool,
    /// `input_dim × hidden_count`, entries in (−1, 1).
    pub input_weights: Matrix,
    /// Entries in (0, 1).
    pub biases: Vec<f64>,
    /// `feature_width × 2`; zero until trained.
    pub beta: Matrix,
    pub lambda: f64,
    pub seed: u64,
}

impl RvflModel {
    /// Width of `H`: hidden units plus, with direct links, the raw inputs.
    pub fn feature_width(&self) -> usize {
        self.hidden_count + if self.direct_links { self.input_dim } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_weights.shape() != (self.input_dim, self.hidden_count)
            || self.biases.len() != self.hidden_count
            || self.beta.shape() != (self.feature_width(), 2)
        {
            return Err(Error::Format("RVFL matrices do not match the stated dimensions".into()));
        }
        if !self.input_weights.is_finite()
            || !self.beta.is_finite()
            || self.biases.iter().any(|b| !b.is_finite())
        {
            return Err(Error::Format("non-finite RVFL parameter".into()));
        }
        Ok(())
    }
}

pub fn init_rvfl(input_dim: usize, hidden_count: usize, seed: u64) -> Result<RvflModel> {
    if input_dim == 0 || hidden_count == 0 {
        return Err(Error::config("RVFL input and hidden dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_weights = Matrix::from_fn(input_dim, hidden_count, |_, _| {
        2.0 * rng.sample::<f64, _>(Open01) - 1.0
    });
    let biases = (0..hidden_count).map(|_| rng.sample(Open01)).collect();
    Ok(RvflModel {
        input_dim,
        hidden_count,
        direct_links: true,
        input_weights,
        biases,
        beta: Matrix::zeros(input_dim + hidden_count, 2),
        lambda: DEFAULT_LAMBDA,
        seed,
    })
}

/// Initialize from a config; the resulting model carries its `lambda` for training.
pub fn init_rvfl_with(input_dim: usize, cfg: &RvflConfig) -> Result<RvflModel> {
    let mut m = init_rvfl(input_dim, cfg.hidden_count, cfg.seed)?;
    m.direct_links = cfg.direct_links;
    m.beta = Matrix::zeros(m.feature_width(), 2);
    m.lambda = cfg.lambda;
    Ok(m)
}

fn check_input(model: &RvflModel, x: &Matrix) -> Result<()> {
    if x.cols() != model.input_dim {
        return Err(Error::shape(format!(
            "RVFL expects {} input features, got {}",
            model.input_dim,
            x.cols()
        )));
    }
    Ok(())
}

fn hidden_dmatrix(model: &RvflModel, x: &Matrix) -> Result<DMatrix<f64>> {
    check_input(model, x)?;
    let xd = x.to_dmatrix();
    let mut act = &xd * model.input_weights.to_dmatrix();
    for (j, mut col) in act.column_iter_mut().enumerate() {
        let b = model.biases[j];
        col.iter_mut().for_each(|v| *v = sigmoid(*v + b));
    }
    if !model.direct_links {
        return Ok(act);
    }
    let (n, d, u) = (x.rows(), model.input_dim, model.hidden_count);
    let mut h = DMatrix::zeros(n, d + u);
    h.columns_mut(0, d).copy_from(&xd);
    h.columns_mut(d, u).copy_from(&act);
    Ok(h)
}

/// `[X | sigmoid(XW + b)]`, or just the hidden part without direct links.
pub fn hidden_features(model: &RvflModel, x: &Matrix) -> Result<Matrix> {
    hidden_dmatrix(model, x).map(|h| Matrix::from_dmatrix(&h))
}

/// `n × 2` one-hot targets, column 1 for vulnerable.
pub fn one_hot(labels: &[Label]) -> Matrix {
    Matrix::from_fn(labels.len(), 2, |r, c| f64::from(labels[r].as_u8() as usize == c))
}

/// Fit the output weights; `W` and `b` are copied through untouched.
pub fn train_rvfl(model: &RvflModel, x: &Matrix, y: &Matrix, lambda: f64) -> Result<RvflModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config(format!("lambda must be a finite value >= 0, got {lambda}")));
    }
    if x.rows() == 0 {
        return Err(Error::Model("RVFL training needs at least one sample".into()));
    }
    if y.shape() != (x.rows(), 2) {
        return Err(Error::shape(format!(
            "targets are {}×{}, expected {}×2",
            y.rows(),
            y.cols(),
            x.rows()
        )));
    }
    let h = hidden_dmatrix(model, x)?;
    let ht = h.transpose();
    let mut gram = &ht * &h;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = &ht * y.to_dmatrix();
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Numeric(if lambda == 0.0 {
            "HᵀH is singular; use a ridge coefficient lambda > 0".into()
        } else {
            format!("HᵀH + {lambda}·I is not numerically positive definite; increase lambda")
        })
    })?;
    let beta = chol.solve(&rhs);
    let mut out = model.clone();
    out.beta = Matrix::from_dmatrix(&beta);
    out.lambda = lambda;
    if !out.beta.is_finite() {
        return Err(Error::Numeric("RVFL solve produced non-finite weights".into()));
    }
    Ok(out)
}

/// Train with the lambda stored in the model and labels instead of targets.
pub fn train_rvfl_labels(model: &RvflModel, x: &Matrix, labels: &[Label]) -> Result<RvflModel> {
    train_rvfl(model, x, &one_hot(labels), model.lambda)
}

fn decide(scores: [f64; 2]) -> Label {
    Label::from(scores[1] > scores[0])
}

/// Scores `H·beta` for one input; the label is the argmax with ties going to safe.
pub fn predict_rvfl(model: &RvflModel, x: &[f64]) -> Result<(Label, [f64; 2])> {
    let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
    Ok(predict_rvfl_batch(model, &m)?[0])
}

pub fn predict_rvfl_batch(model: &RvflModel, x: &Matrix) -> Result<Vec<(Label, [f64; 2])>> {
    let scores = hidden_dmatrix(model, x)? * model.beta.to_dmatrix();
    Ok(scores
        .row_iter()
        .map(|r| {
            let s = [r[0], r[1]];
            (decide(s), s)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_ranges_and_errors() {
        let m = init_rvfl(250, 120, 4).unwrap();
        assert_eq!(m.input_weights.shape(), (250, 120));
        assert_eq!(m.biases.len(), 120);
        assert!(m.input_weights.as_slice().iter().all(|&w| w > -1.0 && w < 1.0));
        assert!(m.biases.iter().all(|&b| b > 0.0 && b < 1.0));
        assert_eq!(m, init_rvfl(250, 120, 4).unwrap());
        assert!(init_rvfl(250, 0, 4).is_err());
        assert!(init_rvfl(0, 3, 4).is_err());
    }

    #[test]
    fn hidden_features_layout() {
        let m = init_rvfl(3, 4, 0).unwrap();
        let h = hidden_features(&m, &Matrix::zeros(1, 3)).unwrap();
        assert_eq!(h.shape(), (1, 7));
        assert_eq!(&h.row(0)[..3], &[0.0; 3]);
        for (j, &b) in m.biases.iter().enumerate() {
            assert_eq!(h.get(0, 3 + j), sigmoid(b));
        }
        let x = Matrix::from_fn(5, 3, |r, c| (r * 3 + c) as f64 - 7.0);
        let h = hidden_features(&m, &x).unwrap();
        assert!((0..5).all(|r| h.row(r)[3..].iter().all(|&v| v > 0.0 && v < 1.0)));
        assert!(hidden_features(&m, &Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn without_direct_links_only_hidden_units() {
        let cfg = RvflConfig { hidden_count: 4, direct_links: false, ..RvflConfig::default() };
        let m = init_rvfl_with(3, &cfg).unwrap();
        assert_eq!(m.feature_width(), 4);
        assert_eq!(hidden_features(&m, &Matrix::zeros(2, 3)).unwrap().shape(), (2, 4));
        let y = one_hot(&[Label::Safe, Label::Vulnerable]);
        let x = Matrix::from_vec(2, 3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(train_rvfl(&m, &x, &y, 1e-3).unwrap().beta.shape(), (4, 2));
    }

    #[test]
    fn heavy_ridge_shrinks_weights() {
        let m = init_rvfl(2, 5, 1).unwrap();
        let x = Matrix::from_fn(10, 2, |r, c| (r as f64 - 4.5) * if c == 0 { 1.0 } else { -0.3 });
        let labels: Vec<Label> = (0..10).map(|r| Label::from(r >= 5)).collect();
        let t = train_rvfl(&m, &x, &one_hot(&labels), 1e9).unwrap();
        assert!(t.beta.frobenius_norm() < 1e-3);
        assert_eq!(t.input_weights, m.input_weights);
        assert_eq!(t.biases, m.biases);
        assert!(train_rvfl(&m, &x, &one_hot(&labels), -1.0).is_err());
    }

    #[test]
    fn singular_without_ridge_is_reported() {
        let m = init_rvfl(2, 3, 1).unwrap();
        // an all-zero input column leaves an exact zero on the diagonal of HᵀH
        let x = Matrix::from_fn(6, 2, |r, c| if c == 0 { r as f64 } else { 0.0 });
        let labels: Vec<Label> = (0..6).map(|r| Label::from(r % 2 == 0)).collect();
        let err = train_rvfl(&m, &x, &one_hot(&labels), 0.0).unwrap_err();
        assert!(err.to_string().contains("lambda > 0"), "{err}");
    }

    #[test]
    fn argmax_ties_go_to_safe() {
        assert_eq!(decide([0.9, 0.1]), Label::Safe);
        assert_eq!(decide([0.5, 0.5]), Label::Safe);
        assert_eq!(decide([0.1, 0.2]), Label::Vulnerable);
    }
}
