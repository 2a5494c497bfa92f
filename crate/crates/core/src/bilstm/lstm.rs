use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};

/// One gate: `a = x·w_input + h·w_hidden + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    /// `d_in × u`
    pub w_input: Matrix,
    /// `u × u`
    pub w_hidden: Matrix,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(d_in: usize, u: usize) -> Self {
        Gate {
            w_input: Matrix::zeros(d_in, u),
            w_hidden: Matrix::zeros(u, u),
            bias: vec![0.0; u],
        }
    }

    fn uniform(d_in: usize, u: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = || rng.gen_range(-bound..bound);
        Gate {
            w_input: Matrix::from_fn(d_in, u, |_, _| draw()),
            w_hidden: Matrix::from_fn(u, u, |_, _| draw()),
            bias: (0..u).map(|_| draw()).collect(),
        }
    }

    fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.bias.clone();
        self.w_input.accumulate_vecmat(x, &mut a);
        self.w_hidden.accumulate_vecmat(h, &mut a);
        a
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.w_input.as_mut_slice(),
            self.w_hidden.as_mut_slice(),
            &mut self.bias,
        ]
    }

    fn slices(&self) -> [&[f64]; 3] {
        [self.w_input.as_slice(), self.w_hidden.as_slice(), &self.bias]
    }
}

/// Parameters of one LSTM direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmDirectionParams {
    pub input: Gate,
    pub forget: Gate,
    pub cell: Gate,
    pub output: Gate,
}

impl LstmDirectionParams {
    pub fn zeros(d_in: usize, u: usize) -> Self {
        LstmDirectionParams {
            input: Gate::zeros(d_in, u),
            forget: Gate::zeros(d_in, u),
            cell: Gate::zeros(d_in, u),
            output: Gate::zeros(d_in, u),
        }
    }

    /// Uniform in `±1/√(d_in + u)`, with the forget-gate bias shifted by +1.
    pub(crate) fn init(d_in: usize, u: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / ((d_in + u) as f64).sqrt();
        let mut p = LstmDirectionParams {
            input: Gate::uniform(d_in, u, bound, rng),
            forget: Gate::uniform(d_in, u, bound, rng),
            cell: Gate::uniform(d_in, u, bound, rng),
            output: Gate::uniform(d_in, u, bound, rng),
        };
        p.forget.bias.iter_mut().for_each(|b| *b += 1.0);
        p
    }

    pub fn units(&self) -> usize {
        self.input.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input.w_input.rows()
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let [a, b, c, d] = [&mut self.input, &mut self.forget, &mut self.cell, &mut self.output];
        let mut out = Vec::with_capacity(12);
        out.extend(a.slices_mut());
        out.extend(b.slices_mut());
        out.extend(c.slices_mut());
        out.extend(d.slices_mut());
        out
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        [&self.input, &self.forget, &self.cell, &self.output]
            .into_iter()
            .flat_map(Gate::slices)
            .collect()
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let (d, u) = (self.input_dim(), self.units());
        let ok = [&self.input, &self.forget, &self.cell, &self.output].iter().all(|g| {
            g.w_input.shape() == (d, u) && g.w_hidden.shape() == (u, u) && g.bias.len() == u
        });
        if !ok {
            return Err(Error::Format("LSTM gate shapes are inconsistent".into()));
        }
        if self.slices().iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::Format("non-finite LSTM parameter".into()));
        }
        Ok(())
    }
}

/// Everything one timestep needs for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Step {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
    pub(crate) h: Vec<f64>,
}

pub(crate) fn run(params: &LstmDirectionParams, x: &Matrix) -> Result<Vec<Step>> {
    if x.cols() != params.input_dim() {
        return Err(Error::shape(format!(
            "LSTM expects {} features per timestep, got {}",
            params.input_dim(),
            x.cols()
        )));
    }
    let u = params.units();
    let mut h = vec![0.0; u];
    let mut c = vec![0.0; u];
    let mut steps = Vec::with_capacity(x.rows());
    for t in 0..x.rows() {
        let xt = x.row(t);
        let mut i = params.input.preactivation(xt, &h);
        let mut f = params.forget.preactivation(xt, &h);
        let mut g = params.cell.preactivation(xt, &h);
        let mut o = params.output.preactivation(xt, &h);
        i.iter_mut().for_each(|v| *v = sigmoid(*v));
        f.iter_mut().for_each(|v| *v = sigmoid(*v));
        g.iter_mut().for_each(|v| *v = v.tanh());
        o.iter_mut().for_each(|v| *v = sigmoid(*v));
        let c_new: Vec<f64> = (0..u).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
        let h_new: Vec<f64> = (0..u).map(|k| o[k] * tanh_c[k]).collect();
        steps.push(Step {
            h_prev: std::mem::replace(&mut h, h_new.clone()),
            c_prev: std::mem::replace(&mut c, c_new),
            i,
            f,
            g,
            o,
            tanh_c,
            h: h_new,
        });
    }
    Ok(steps)
}

/// Hidden states `h_1..h_T` of one direction, starting from `h_0 = c_0 = 0`.
pub fn lstm_forward(params: &LstmDirectionParams, x: &Matrix) -> Result<Vec<Vec<f64>>> {
    Ok(run(params, x)?.into_iter().map(|s| s.h).collect())
}

/// Backpropagation through time. `dh[t]` is the loss gradient arriving at `h_t`
/// from outside the recurrence; parameter gradients are added into `grads`.
pub(crate) fn backprop(
    params: &LstmDirectionParams,
    x: &Matrix,
    steps: &[Step],
    dh: &[Vec<f64>],
    grads: &mut LstmDirectionParams,
) {
    let u = params.units();
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];
    let mut da = [vec![0.0; u], vec![0.0; u], vec![0.0; u], vec![0.0; u]];
    for t in (0..steps.len()).rev() {
        let s = &steps[t];
        for k in 0..u {
            let dh_k = dh[t][k] + dh_next[k];
            let d_o = dh_k * s.tanh_c[k];
            let dc = dh_k * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
            let d_i = dc * s.g[k];
            let d_g = dc * s.i[k];
            let d_f = dc * s.c_prev[k];
            dc_next[k] = dc * s.f[k];
            da[0][k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da[1][k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da[2][k] = d_g * (1.0 - s.g[k] * s.g[k]);
            da[3][k] = d_o * s.o[k] * (1.0 - s.o[k]);
        }
        let xt = x.row(t);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let pairs = [
            (&params.input, &mut grads.input),
            (&params.forget, &mut grads.forget),
            (&params.cell, &mut grads.cell),
            (&params.output, &mut grads.output),
        ];
        for ((p, g), a) in pairs.into_iter().zip(&da) {
            outer_add(&mut g.w_input, xt, a);
            outer_add(&mut g.w_hidden, &s.h_prev, a);
            g.bias.iter_mut().zip(a).for_each(|(b, v)| *b += v);
            for (k, d) in dh_next.iter_mut().enumerate() {
                *d += dot(p.w_hidden.row(k), a);
            }
        }
    }
}

/// `m += aᵀ·b`
fn outer_add(m: &mut Matrix, a: &[f64], b: &[f64]) {
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        for (v, bv) in m.row_mut(k).iter_mut().zip(b) {
            *v += ak * bv;
        }
    }
}
