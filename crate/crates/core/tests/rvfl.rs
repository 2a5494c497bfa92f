mod common;

use gadget_detect::corpus::Label;
use gadget_detect::linalg::Matrix;
use gadget_detect::rvfl::{
    hidden_features, init_rvfl, init_rvfl_with, one_hot, predict_rvfl, predict_rvfl_batch, train_rvfl,
    train_rvfl_labels, RvflConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_perturbation(rng: &mut ChaCha8Rng, rows: usize, cols: usize, norm: f64) -> Matrix {
    let mut d = common::random_matrix(rng, rows, cols, 1.0);
    let scale = norm / d.frobenius_norm();
    d.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    d
}

#[test]
fn trained_weights_are_the_ridge_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for problem in 0..50 {
        let (x, labels) = common::random_problem(&mut rng);
        let lambda = 10f64.powf(rng.gen_range(-4.0..0.0));
        let hidden = rng.gen_range(1..=10);
        let model = init_rvfl(x.cols(), hidden, problem).unwrap();
        let y = one_hot(&labels);
        let trained = train_rvfl(&model, &x, &y, lambda).unwrap();
        let h = hidden_features(&trained, &x).unwrap();

        let residual = common::normal_equation_residual(&h, &y, &trained.beta, lambda);
        assert!(residual <= 1e-8, "problem {problem}: residual {residual:e}");

        let best = common::ridge_loss(&h, &y, &trained.beta, lambda);
        for _ in 0..100 {
            let d = unit_perturbation(&mut rng, trained.beta.rows(), 2, 1e-3);
            let mut moved = trained.beta.clone();
            moved.as_mut_slice().iter_mut().zip(d.as_slice()).for_each(|(b, d)| *b += d);
            assert!(common::ridge_loss(&h, &y, &moved, lambda) >= best, "problem {problem}");
        }
    }
}

#[test]
fn random_part_is_frozen_and_training_repeats() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, labels) = common::random_problem(&mut rng);
    let model = init_rvfl(x.cols(), 7, 9).unwrap();
    let a = train_rvfl_labels(&model, &x, &labels).unwrap();
    let b = train_rvfl_labels(&model, &x, &labels).unwrap();
    assert_eq!(a.input_weights, model.input_weights);
    assert_eq!(a.biases, model.biases);
    assert_eq!(a, b);
    assert!(a.input_weights.as_slice().iter().all(|w| *w > -1.0 && *w < 1.0));
    assert!(a.biases.iter().all(|b| *b > 0.0 && *b < 1.0));
}

#[test]
fn argmax_ignores_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, labels) = common::random_problem(&mut rng);
    let trained = train_rvfl_labels(&init_rvfl(x.cols(), 6, 2).unwrap(), &x, &labels).unwrap();
    let base: Vec<Label> = predict_rvfl_batch(&trained, &x).unwrap().into_iter().map(|p| p.0).collect();
    for c in [1e-6, 0.3, 7.0, 1e6] {
        let mut scaled = trained.clone();
        scaled.beta.as_mut_slice().iter_mut().for_each(|b| *b *= c);
        let got: Vec<Label> = predict_rvfl_batch(&scaled, &x).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(got, base);
    }
}

#[test]
fn separable_clusters_are_classified() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 200;
    let labels: Vec<Label> = (0..n).map(|i| Label::from(i % 2 == 0)).collect();
    let x = Matrix::from_fn(n, 5, |r, _| {
        let centre = if labels[r].is_vulnerable() { 1.0 } else { -1.0 };
        centre + rng.gen_range(-0.5..0.5)
    });
    let m = train_rvfl_labels(&init_rvfl_with(5, &RvflConfig::default()).unwrap(), &x, &labels).unwrap();
    for (i, l) in labels.iter().enumerate() {
        assert_eq!(predict_rvfl(&m, x.row(i)).unwrap().0, *l);
    }
}

#[test]
fn without_direct_links_only_hidden_units_feed_the_output() {
    let cfg = RvflConfig { hidden_count: 4, direct_links: false, ..RvflConfig::default() };
    let m = init_rvfl_with(3, &cfg).unwrap();
    assert_eq!(m.feature_width(), 4);
    let x = Matrix::from_fn(5, 3, |r, c| (r * 3 + c) as f64 / 10.0);
    assert_eq!(hidden_features(&m, &x).unwrap().shape(), (5, 4));
    let with = init_rvfl_with(3, &RvflConfig { hidden_count: 4, ..RvflConfig::default() }).unwrap();
    let h = hidden_features(&with, &x).unwrap();
    assert_eq!(h.shape(), (5, 7));
    assert_eq!(&h.row(2)[..3], x.row(2));
}

#[test]
fn bad_inputs() {
    let m = init_rvfl(3, 4, 0).unwrap();
    let x = Matrix::zeros(2, 3);
    assert!(train_rvfl(&m, &x, &Matrix::zeros(2, 2), -1.0).is_err());
    assert!(train_rvfl(&m, &x, &Matrix::zeros(3, 2), 1e-3).is_err());
    assert!(train_rvfl(&m, &Matrix::zeros(2, 5), &Matrix::zeros(2, 2), 1e-3).is_err());
    assert!(predict_rvfl(&m, &[1.0]).is_err());
    assert!(init_rvfl(0, 3, 0).is_err());
}
