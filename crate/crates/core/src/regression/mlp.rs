use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpOptions {
    pub hidden: [usize; 2],
    pub epochs: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
    /// Negative-side slopes are drawn from this interval while training and
    /// fixed to its midpoint for inference.
    pub alpha_range: (f64, f64),
}

impl Default for MlpOptions {
    fn default() -> Self {
        Self {
            hidden: [10, 10],
            epochs: 5000,
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            seed: 0,
            alpha_range: (1.0 / 8.0, 1.0 / 3.0),
        }
    }
}

/// Fully connected network with leaky activations on the hidden layers and
/// a linear output layer. Inputs and outputs are standardized internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub sizes: Vec<usize>,
    /// Layer `l` weights, `sizes[l+1] x sizes[l]`, row-major.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub alpha_range: (f64, f64),
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_shift: Vec<f64>,
    pub output_scale: Vec<f64>,
    /// Training loss (mean squared error, standardized units) per epoch.
    pub history: Vec<f64>,
}

fn leaky(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

impl MlpModel {
    /// Uniform initialization in `+-1/sqrt(fan_in)` for weights and biases.
    pub fn init(sizes: &[usize], alpha_range: (f64, f64), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            weights.push((0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect());
            biases.push((0..w[1]).map(|_| rng.random_range(-bound..bound)).collect());
        }
        Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            alpha_range,
            input_shift: vec![0.0; sizes[0]],
            input_scale: vec![1.0; sizes[0]],
            output_shift: vec![0.0; sizes[sizes.len() - 1]],
            output_scale: vec![1.0; sizes[sizes.len() - 1]],
            history: Vec::new(),
        }
    }

    pub fn inference_alphas(&self) -> Vec<Vec<f64>> {
        let mid = 0.5 * (self.alpha_range.0 + self.alpha_range.1);
        self.sizes[1..self.sizes.len() - 1].iter().map(|&h| vec![mid; h]).collect()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&p[at..at + nw]);
            at += nw;
            b.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    /// Forward pass in standardized units; returns every layer's
    /// pre-activation and activation.
    fn forward(&self, x: &[f64], alphas: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut act = Vec::with_capacity(layers + 1);
        act.push(x.to_vec());
        for l in 0..layers {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let input = &act[l];
            let z: Vec<f64> = (0..nout)
                .map(|o| self.biases[l][o] + linalg::dot(&self.weights[l][o * nin..(o + 1) * nin], input))
                .collect();
            let a = if l + 1 < layers {
                z.iter().zip(&alphas[l]).map(|(v, al)| leaky(*v, *al)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    /// Mean squared error over a standardized batch and its gradient with
    /// respect to [`params`](Self::params), for fixed negative slopes.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[Vec<f64>], alphas: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let layers = self.weights.len();
        let nout = self.sizes[layers];
        let norm = (x.len() * nout) as f64;
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            let (pre, act) = self.forward(xi, alphas);
            let mut delta: Vec<f64> = act[layers]
                .iter()
                .zip(yi)
                .map(|(p, t)| {
                    loss += (p - t) * (p - t);
                    2.0 * (p - t) / norm
                })
                .collect();
            for l in (0..layers).rev() {
                let nin = self.sizes[l];
                for (o, d) in delta.iter().enumerate() {
                    gb[l][o] += d;
                    for (i, a) in act[l].iter().enumerate() {
                        gw[l][o * nin + i] += d * a;
                    }
                }
                if l > 0 {
                    delta = (0..nin)
                        .map(|i| {
                            let back: f64 = delta
                                .iter()
                                .enumerate()
                                .map(|(o, d)| d * self.weights[l][o * nin + i])
                                .sum();
                            let slope = if pre[l - 1][i] >= 0.0 { 1.0 } else { alphas[l - 1][i] };
                            back * slope
                        })
                        .collect();
                }
            }
        }
        let mut grad = Vec::with_capacity(self.n_params());
        for (w, b) in gw.iter().zip(&gb) {
            grad.extend_from_slice(w);
            grad.extend_from_slice(b);
        }
        (loss / norm, grad)
    }

    pub fn predict_one(&self, q: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = q
            .iter()
            .zip(self.input_shift.iter().zip(&self.input_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let (_, act) = self.forward(&x, &self.inference_alphas());
        act[act.len() - 1]
            .iter()
            .zip(self.output_shift.iter().zip(&self.output_scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    pub fn predict(&self, q: &Matrix) -> Result<Matrix> {
        if q.ncols() != self.sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: self.sizes[0],
                actual: q.ncols(),
            });
        }
        let nout = self.sizes[self.sizes.len() - 1];
        let rows: Vec<Vec<f64>> = (0..q.nrows()).map(|i| self.predict_one(&linalg::row(q, i))).collect();
        Ok(Matrix::from_fn(q.nrows(), nout, |i, j| rows[i][j]))
    }
}

fn column_stats(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    (0..m.ncols())
        .map(|j| {
            let c = m.col_as_slice(j);
            let mean = linalg::mean(c);
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
        })
        .unzip()
}

/// Full-batch training with Adam. Negative-side slopes are redrawn for every
/// hidden unit at every epoch.
pub fn mlp_train(x: &Matrix, y: &Matrix, opts: &MlpOptions) -> Result<MlpModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::LengthMismatch { left: x.nrows(), right: y.nrows() });
    }
    if x.nrows() == 0 {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let sizes = [x.ncols(), opts.hidden[0], opts.hidden[1], y.ncols()];
    let mut model = MlpModel::init(&sizes, opts.alpha_range, opts.seed);
    let (im, is) = column_stats(x);
    let (om, os) = column_stats(y);
    let xs: Vec<Vec<f64>> = (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| (x[(i, j)] - im[j]) / is[j]).collect())
        .collect();
    let ys: Vec<Vec<f64>> = (0..y.nrows())
        .map(|i| (0..y.ncols()).map(|j| (y[(i, j)] - om[j]) / os[j]).collect())
        .collect();
    model.input_shift = im;
    model.input_scale = is;
    model.output_shift = om;
    model.output_scale = os;

    // separate stream so the slopes do not perturb the initialization
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut params = model.params();
    let mut m1 = vec![0.0; params.len()];
    let mut m2 = vec![0.0; params.len()];
    let (lo, hi) = opts.alpha_range;
    for epoch in 1..=opts.epochs {
        let alphas: Vec<Vec<f64>> = opts
            .hidden
            .iter()
            .map(|&h| (0..h).map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect())
            .collect();
        let (loss, grad) = model.loss_and_gradient(&xs, &ys, &alphas);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedLoss { epoch });
        }
        model.history.push(loss);
        let c1 = 1.0 - opts.beta1.powi(epoch as i32);
        let c2 = 1.0 - opts.beta2.powi(epoch as i32);
        for i in 0..params.len() {
            m1[i] = opts.beta1 * m1[i] + (1.0 - opts.beta1) * grad[i];
            m2[i] = opts.beta2 * m2[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
            params[i] -= opts.step_size * (m1[i] / c1) / ((m2[i] / c2).sqrt() + 1e-8);
        }
        model.set_params(&params);
    }
    Ok(model)
}
