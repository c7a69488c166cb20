//! Adam and the mini-batch training loop shared by the neural regressors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::seed;

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / (math::sqrt(*v / c2) + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Share of rows, taken from the end, held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, batch_size: 32, max_epochs: 200, patience: 10, validation_fraction: 0.1 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| Error::InvalidParam { name: name.into(), reason: reason.into() };
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(bad("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(bad("batch_size", "must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(bad("max_iter", "must be at least 1"));
        }
        if self.patience == 0 {
            return Err(bad("patience", "must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(bad("validation_fraction", "must be in (0, 1)"));
        }
        Ok(())
    }

    /// Rows used for fitting; the remaining tail validates.
    pub fn fit_rows(&self, n: usize) -> Result<usize> {
        let val = (math::floor(self.validation_fraction * n as f64) as usize).max(1);
        if n < val + 2 {
            return Err(Error::TooFewSamples(format!("{n} rows leave fewer than 2 for fitting")));
        }
        Ok(n - val)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs_run: usize,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

/// Mini-batch Adam over rows `0..n_fit` with an epoch-level early stop.
///
/// `batch_loss(params, rows, grad)` must write the batch gradient into the
/// zeroed `grad` and return the batch loss; `val_loss(params)` scores the
/// held-out rows. The best validation weights are left in `params`.
pub fn train<B, V>(
    params: &mut [f64],
    n_fit: usize,
    cfg: &TrainConfig,
    seed: u64,
    mut batch_loss: B,
    mut val_loss: V,
) -> Result<TrainingLog>
where
    B: FnMut(&[f64], &[usize], &mut [f64]) -> f64,
    V: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if n_fit == 0 {
        return Err(Error::EmptyData);
    }
    let mut rng = seed::rng(seed);
    let mut adam = Adam::new(params.len(), cfg.learning_rate);
    let mut grad = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..n_fit).collect();
    let mut best = params.to_vec();
    let mut log = TrainingLog { best_val_loss: f64::INFINITY, ..TrainingLog::default() };
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = batch_loss(params, batch, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss(epoch));
            }
            total += loss * batch.len() as f64;
            adam.step(params, &grad);
        }
        let vl = val_loss(params);
        if !vl.is_finite() {
            return Err(Error::DivergedLoss(epoch));
        }
        log.epochs_run = epoch;
        log.train_loss.push(total / n_fit as f64);
        log.val_loss.push(vl);
        if vl < log.best_val_loss {
            log.best_val_loss = vl;
            log.best_epoch = epoch;
            best.copy_from_slice(params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    params.copy_from_slice(&best);
    Ok(log)
}

/// Uniform Glorot draws for a `fan_out x fan_in` weight block.
pub fn glorot(rng: &mut seed::Rng, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    use rand::Rng as _;
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    for w in out {
        *w = rng.random_range(-limit..=limit);
    }
}
