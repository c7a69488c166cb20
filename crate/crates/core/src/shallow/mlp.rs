//! Fully connected ReLU network with a linear output layer.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig};
use crate::nn::{self, TrainConfig, TrainingLog};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    /// L2 strength on weights.
    pub alpha: f64,
    pub learning_rate: f64,
    /// Epoch cap.
    pub max_iter: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: vec![100],
            alpha: 0.0001,
            learning_rate: 0.001,
            max_iter: 1500,
            batch_size: 32,
            patience: 10,
            validation_fraction: 0.1,
        }
    }
}

impl MlpParams {
    pub const KEYS: &'static [&'static str] =
        &["hidden_layers", "alpha", "learning_rate", "max_iter", "batch_size", "patience", "validation_fraction"];

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        cfg.check_keys(Self::KEYS)?;
        let d = Self::default();
        let p = Self {
            hidden_layers: cfg.usize_list_or("hidden_layers", &d.hidden_layers)?,
            alpha: cfg.f64_or("alpha", d.alpha)?,
            learning_rate: cfg.f64_or("learning_rate", d.learning_rate)?,
            max_iter: cfg.usize_or("max_iter", d.max_iter)?,
            batch_size: cfg.usize_or("batch_size", d.batch_size)?,
            patience: cfg.usize_or("patience", d.patience)?,
            validation_fraction: cfg.f64_or("validation_fraction", d.validation_fraction)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_iter,
            patience: self.patience,
            validation_fraction: self.validation_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(invalid("hidden_layers", "widths must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must be non-negative"));
        }
        self.train_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Dense>,
    pub training: TrainingLog,
}

/// Layer widths from input to output.
pub fn layer_sizes(inputs: usize, hidden: &[usize], outputs: usize) -> Vec<usize> {
    let mut s = vec![inputs];
    s.extend_from_slice(hidden);
    s.push(outputs);
    s
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn offsets(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut at = 0;
    sizes
        .windows(2)
        .map(|w| {
            let o = (at, at + w[0] * w[1]);
            at += w[0] * w[1] + w[1];
            o
        })
        .collect()
}

/// Forward pass keeping every layer's output; hidden outputs are post-ReLU.
fn forward(sizes: &[usize], params: &[f64], row: &[f64], acts: &mut Vec<Vec<f64>>) {
    acts.clear();
    acts.push(row.to_vec());
    let last = sizes.len() - 2;
    for (l, (w_at, b_at)) in offsets(sizes).into_iter().enumerate() {
        let (nin, nout) = (sizes[l], sizes[l + 1]);
        let input = &acts[l];
        let mut out = vec![0.0; nout];
        for (o, v) in out.iter_mut().enumerate() {
            let w = &params[w_at + o * nin..w_at + (o + 1) * nin];
            let z = params[b_at + o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            *v = if l < last { z.max(0.0) } else { z };
        }
        acts.push(out);
    }
}

/// Penalized batch loss and its gradient, accumulated into `grad`.
pub fn loss_and_grad(
    sizes: &[usize],
    params: &[f64],
    x: &Matrix,
    y: &Matrix,
    rows: &[usize],
    alpha: f64,
    grad: &mut [f64],
) -> f64 {
    let b = rows.len() as f64;
    let m = y.cols() as f64;
    let offs = offsets(sizes);
    let depth = offs.len();
    let mut acts = Vec::new();
    let mut loss = 0.0;
    for &r in rows {
        forward(sizes, params, x.row(r), &mut acts);
        let mut delta: Vec<f64> = acts[depth].iter().zip(y.row(r)).map(|(p, t)| p - t).collect();
        loss += delta.iter().map(|d| d * d).sum::<f64>();
        delta.iter_mut().for_each(|d| *d *= 2.0 / (b * m));
        for l in (0..depth).rev() {
            let (w_at, b_at) = offs[l];
            let nin = sizes[l];
            let input = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                grad[b_at + o] += d;
                let gw = &mut grad[w_at + o * nin..w_at + (o + 1) * nin];
                for (g, a) in gw.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; nin];
                for (o, d) in delta.iter().enumerate() {
                    let w = &params[w_at + o * nin..w_at + (o + 1) * nin];
                    for (p, wv) in prev.iter_mut().zip(w) {
                        *p += wv * d;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    loss /= b * m;
    if alpha > 0.0 {
        let mut sq = 0.0;
        for &(w_at, b_at) in &offs {
            for k in w_at..b_at {
                sq += params[k] * params[k];
                grad[k] += alpha / b * params[k];
            }
        }
        loss += alpha / (2.0 * b) * sq;
    }
    loss
}

fn mse_rows(sizes: &[usize], params: &[f64], x: &Matrix, y: &Matrix, rows: core::ops::Range<usize>) -> f64 {
    let mut acts = Vec::new();
    let count = (rows.len() * y.cols()) as f64;
    let mut total = 0.0;
    for r in rows {
        forward(sizes, params, x.row(r), &mut acts);
        total += acts.last().unwrap().iter().zip(y.row(r)).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
    }
    total / count
}

pub fn init_params(sizes: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut params = vec![0.0; param_count(sizes)];
    for (l, (w_at, b_at)) in offsets(sizes).into_iter().enumerate() {
        nn::glorot(&mut rng, sizes[l], sizes[l + 1], &mut params[w_at..b_at]);
    }
    params
}

/// Trains on rows in order; the last `validation_fraction` of them decide
/// when to stop.
pub fn fit_mlp(x: &Matrix, y: &Matrix, params: &MlpParams, seed: u64) -> Result<MlpModel> {
    params.validate()?;
    if x.rows() == 0 {
        return Err(Error::EmptyData);
    }
    if x.rows() != y.rows() {
        return Err(Error::LengthMismatch { left: x.rows(), right: y.rows() });
    }
    let cfg = params.train_config();
    let n = x.rows();
    let n_fit = cfg.fit_rows(n)?;
    let sizes = layer_sizes(x.cols(), &params.hidden_layers, y.cols());
    let mut flat = init_params(&sizes, seed::derive(seed, 0));
    let training = nn::train(
        &mut flat,
        n_fit,
        &cfg,
        seed::derive(seed, 1),
        |p, rows, g| loss_and_grad(&sizes, p, x, y, rows, params.alpha, g),
        |p| mse_rows(&sizes, p, x, y, n_fit..n),
    )?;
    Ok(MlpModel::from_flat(&sizes, &flat, training))
}

impl MlpModel {
    pub fn from_flat(sizes: &[usize], flat: &[f64], training: TrainingLog) -> Self {
        let layers = offsets(sizes)
            .into_iter()
            .enumerate()
            .map(|(l, (w_at, b_at))| Dense {
                inputs: sizes[l],
                outputs: sizes[l + 1],
                weights: flat[w_at..b_at].to_vec(),
                bias: flat[b_at..b_at + sizes[l + 1]].to_vec(),
            })
            .collect();
        Self { layers, training }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        s.extend(self.layers.last().map(|l| l.outputs));
        s
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let sizes = self.sizes();
        if x.cols() != sizes[0] {
            return Err(Error::DimensionMismatch { expected: sizes[0], got: x.cols() });
        }
        let flat = self.flat();
        let width = *sizes.last().unwrap();
        let mut out = Matrix::zeros(x.rows(), width);
        let mut acts = Vec::new();
        for i in 0..x.rows() {
            forward(&sizes, &flat, x.row(i), &mut acts);
            out.row_mut(i).copy_from_slice(acts.last().unwrap());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn random(n: usize, d: usize, m: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = seed::rng(seed);
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
        let y = Matrix::from_vec(n, m, (0..n * m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
        (x, y)
    }

    fn gradient_check(hidden: &[usize], alpha: f64, seed: u64) -> f64 {
        let (x, y) = random(5, 3, 2, seed);
        let sizes = layer_sizes(3, hidden, 2);
        let mut params = init_params(&sizes, seed);
        // nonzero biases so ReLU kinks are unlikely near the evaluation point
        for (l, (_, b_at)) in offsets(&sizes).into_iter().enumerate() {
            for k in 0..sizes[l + 1] {
                params[b_at + k] = 0.1 * (k as f64 + 1.0);
            }
        }
        let rows: Vec<usize> = (0..5).collect();
        let mut grad = vec![0.0; params.len()];
        loss_and_grad(&sizes, &params, &x, &y, &rows, alpha, &mut grad);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut scratch = vec![0.0; params.len()];
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            let up = loss_and_grad(&sizes, &p, &x, &y, &rows, alpha, &mut scratch);
            p[k] -= 2.0 * h;
            let down = loss_and_grad(&sizes, &p, &x, &y, &rows, alpha, &mut scratch);
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - grad[k]).abs() / (numeric.abs() + grad[k].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        assert!(gradient_check(&[4], 0.0, 1) < 1e-5);
        for (i, hidden) in [vec![4], vec![4, 4]].iter().enumerate() {
            for alpha in [0.0005, 0.002] {
                let e = gradient_check(hidden, alpha, 10 + i as u64);
                assert!(e < 1e-5, "{hidden:?} alpha {alpha}: {e}");
            }
        }
    }

    #[test]
    fn learns_a_linear_map() {
        let mut rng = seed::rng(4);
        let n = 200;
        let x = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
        let y = Matrix::from_vec(n, 1, (0..n).map(|i| 2.0 * x.get(i, 0)).collect()).unwrap();
        let p = MlpParams { hidden_layers: vec![16], alpha: 0.0, learning_rate: 0.01, ..MlpParams::default() };
        let m = fit_mlp(&x, &y, &p, 3).unwrap();
        let pred = m.predict(&x).unwrap();
        let mse: f64 = (0..n).map(|i| (pred.get(i, 0) - y.get(i, 0)).powi(2)).sum::<f64>() / n as f64;
        assert!(mse < 1e-3, "{mse}");
        assert!(m.training.epochs_run <= m.training.best_epoch + p.patience);
    }

    #[test]
    fn first_epoch_reduces_batch_loss() {
        let (x, y) = random(32, 3, 2, 6);
        let sizes = layer_sizes(3, &[8], 2);
        let mut params = init_params(&sizes, 2);
        let rows: Vec<usize> = (0..32).collect();
        let mut g = vec![0.0; params.len()];
        let before = loss_and_grad(&sizes, &params, &x, &y, &rows, 0.0, &mut g);
        let mut adam = nn::Adam::new(params.len(), 1e-3);
        for _ in 0..10 {
            g.iter_mut().for_each(|v| *v = 0.0);
            loss_and_grad(&sizes, &params, &x, &y, &rows, 0.0, &mut g);
            adam.step(&mut params, &g);
        }
        let after = loss_and_grad(&sizes, &params, &x, &y, &rows, 0.0, &mut g);
        assert!(after < before);
    }

    #[test]
    fn zero_networks() {
        let sizes = layer_sizes(3, &[4], 2);
        let mut flat = vec![0.0; param_count(&sizes)];
        let zero = MlpModel::from_flat(&sizes, &flat, TrainingLog::default());
        let (x, _) = random(6, 3, 2, 0);
        assert!(zero.predict(&x).unwrap().as_slice().iter().all(|v| *v == 0.0));
        let n = flat.len();
        flat[n - 2] = 1.5;
        flat[n - 1] = -2.0;
        let biased = MlpModel::from_flat(&sizes, &flat, TrainingLog::default());
        let p = biased.predict(&x).unwrap();
        assert!((0..6).all(|i| p.row(i) == [1.5, -2.0]));
        assert_eq!(biased.sizes(), sizes);
        assert_eq!(biased.flat(), flat);
    }

    #[test]
    fn seeded_and_validated() {
        let (x, y) = random(40, 3, 2, 1);
        let p = MlpParams { hidden_layers: vec![5], max_iter: 20, ..MlpParams::default() };
        assert_eq!(fit_mlp(&x, &y, &p, 9).unwrap(), fit_mlp(&x, &y, &p, 9).unwrap());
        assert!(fit_mlp(&x, &y, &MlpParams { max_iter: 0, ..p.clone() }, 0).is_err());
        assert!(fit_mlp(&x, &y, &MlpParams { hidden_layers: vec![0], ..p.clone() }, 0).is_err());
        assert!(fit_mlp(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2), &p, 0).is_err());
        let model = fit_mlp(&x, &y, &p, 9).unwrap();
        assert!(matches!(model.predict(&Matrix::zeros(1, 4)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn config_round_trip() {
        let cfg = ModelConfig::default()
            .with("hidden_layers", crate::model::ParamValue::IntList(vec![50, 50]))
            .with("alpha", 0.001)
            .with("learning_rate", 0.005);
        let p = MlpParams::from_config(&cfg).unwrap();
        assert_eq!(p.hidden_layers, vec![50, 50]);
        assert_eq!(p.max_iter, 1500);
    }
}
