#![allow(dead_code)]

use gadget_detect::bilstm::{loss_and_gradients, BilstmModel};
use gadget_detect::corpus::Label;
use gadget_detect::linalg::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SAMPLE_0: [&str; 6] = [
    "static void goodG2B()",
    "list < char * > dataList ;",
    "goodG2BSink ( dataList ) ;",
    "void goodG2BSink(list<char *> List)",
    "char * data = List.back ();",
    "if ( sscanf ( data , \" &d\" , & n ) == 1 ))",
];

pub const LEVEL_1: [&str; 6] = [
    "static void F1()",
    "list < char * > dataList ;",
    "F2 ( dataList );",
    "void F2(list<char *> List)",
    "char * data = List . back ( );",
    "if ( sscanf (  data ,\" &d\" , & n) == 1 ))",
];

pub const LEVEL_2: [&str; 6] = [
    "static void F1()",
    "list < char * > V1 ;",
    "F2 ( V1 );",
    "void F2(list<char *> V2)",
    "char * V3 = V2 . back ( );",
    "if ( sscanf (  V3 , V4 , & V5 ) == 1 ))",
];

/// Lines 2-6 only; line 1 is compared separately.
pub const LEVEL_3_TAIL: [&str; 5] = [
    "list < T2 * > V1 ;",
    "F2 ( V1 );",
    "void F2(list<T2 *> V2)",
    "T2 * V3 = V2 . back ( );",
    "if ( sscanf (  V3 , V4 , & V5 ) == 1 ))",
];

/// Whitespace-insensitive token texts of a listing line. Symbol-shaped words
/// and the sample's single literal are split by hand so the oracle does not
/// depend on the lexer under test.
pub fn listing_tokens(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    let mut chars = line.chars().peekable();
    let flush = |w: &mut String, out: &mut Vec<String>| {
        if !w.is_empty() {
            out.push(std::mem::take(w));
        }
    };
    while let Some(c) = chars.next() {
        if c == '"' {
            flush(&mut word, &mut out);
            let mut lit = String::from('"');
            for d in chars.by_ref() {
                lit.push(d);
                if d == '"' {
                    break;
                }
            }
            out.push(lit);
        } else if c.is_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            if c == '=' && chars.peek() == Some(&'=') {
                chars.next();
                out.push("==".into());
            } else if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    flush(&mut word, &mut out);
    out
}

/// FPR, FNR, precision, F1 by explicit loops over the labeled predictions.
pub fn brute_force_metrics(truth: &[Label], pred: &[Label]) -> [Option<f64>; 4] {
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..truth.len() {
        let actual_positive = truth[i] == Label::Vulnerable;
        let predicted_positive = pred[i] == Label::Vulnerable;
        if actual_positive && predicted_positive {
            tp += 1;
        } else if actual_positive {
            fn_ += 1;
        } else if predicted_positive {
            fp += 1;
        } else {
            tn += 1;
        }
    }
    let div = |a: u64, b: u64| if b == 0 { None } else { Some(a as f64 / b as f64) };
    let fpr = div(fp, fp + tn);
    let fnr = div(fn_, fn_ + tp);
    let p = div(tp, tp + fp);
    let f1 = match (p, fnr) {
        (Some(p), Some(fnr)) => {
            let r = 1.0 - fnr;
            if p + r == 0.0 {
                None
            } else {
                Some(2.0 * p * r / (p + r))
            }
        }
        _ => None,
    };
    [fpr, fnr, p, f1]
}

pub fn random_predictions(rng: &mut ChaCha8Rng) -> (Vec<Label>, Vec<Label>) {
    let n = rng.gen_range(0..40);
    let bias: f64 = rng.gen();
    let truth: Vec<Label> = (0..n).map(|_| Label::from(rng.gen_bool(bias))).collect();
    let flip: f64 = rng.gen();
    let pred = truth
        .iter()
        .map(|&t| if rng.gen_bool(flip) { Label::from(!t.is_vulnerable()) } else { t })
        .collect();
    (truth, pred)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Row-major product by plain loops.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

pub fn transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i))
}

/// `‖Hβ − Y‖² + λ‖β‖²`.
pub fn ridge_loss(h: &Matrix, y: &Matrix, beta: &Matrix, lambda: f64) -> f64 {
    let fit = matmul(h, beta);
    let mut loss = 0.0;
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            loss += (fit.get(i, j) - y.get(i, j)).powi(2);
        }
    }
    loss + lambda * beta.as_slice().iter().map(|b| b * b).sum::<f64>()
}

/// `‖(HᵀH + λI)β − HᵀY‖ / ‖HᵀY‖` (Frobenius).
pub fn normal_equation_residual(h: &Matrix, y: &Matrix, beta: &Matrix, lambda: f64) -> f64 {
    let ht = transpose(h);
    let lhs = matmul(&matmul(&ht, h), beta);
    let rhs = matmul(&ht, y);
    let mut num = 0.0;
    for i in 0..rhs.rows() {
        for j in 0..rhs.cols() {
            let v = lhs.get(i, j) + lambda * beta.get(i, j) - rhs.get(i, j);
            num += v * v;
        }
    }
    num.sqrt() / rhs.frobenius_norm()
}

/// Small labeled problem: n ≤ 30 samples, input dim ≤ 10, both classes present.
pub fn random_problem(rng: &mut ChaCha8Rng) -> (Matrix, Vec<Label>) {
    let n = rng.gen_range(4..=30);
    let d = rng.gen_range(1..=10);
    let x = random_matrix(rng, n, d, 1.0);
    let mut labels: Vec<Label> = (0..n).map(|_| Label::from(rng.gen_bool(0.5))).collect();
    labels[0] = Label::Safe;
    labels[1] = Label::Vulnerable;
    (x, labels)
}

/// Worst relative disagreement between analytic gradients and central differences.
pub fn max_relative_gradient_error(model: &BilstmModel, x: &Matrix, label: Label, mask: Option<Vec<f64>>) -> f64 {
    let (_, grads) = loss_and_gradients(model, x, label, mask.clone()).unwrap();
    let analytic = grads.to_flat();
    let theta = model.flat_parameters();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (k, &a) in analytic.iter().enumerate() {
        let mut t = theta.clone();
        t[k] += h;
        probe.set_flat_parameters(&t).unwrap();
        let up = loss_and_gradients(&probe, x, label, mask.clone()).unwrap().0;
        t[k] -= 2.0 * h;
        probe.set_flat_parameters(&t).unwrap();
        let down = loss_and_gradients(&probe, x, label, mask.clone()).unwrap().0;
        let numeric = (up - down) / (2.0 * h);
        // a step-1e-5 central difference carries ~3e-11 of rounding noise, so below
        // a gradient scale of 1e-5 the bound acts as an absolute 1e-10 tolerance
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-5);
        worst = worst.max(rel);
    }
    worst
}
