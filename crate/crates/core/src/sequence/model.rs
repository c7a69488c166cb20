use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::net::{Architecture, CellActivation, ConvSpec};
use super::SequenceTensor;
use crate::data::Variable;
use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig};
use crate::nn::{self, TrainConfig, TrainingLog};
use crate::seed;

/// Settings shared by the LSTM and CNN-LSTM families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceParams {
    pub conv: Option<ConvSpec>,
    pub units: Vec<usize>,
    pub activation: CellActivation,
    pub train: TrainConfig,
}

fn default_train() -> TrainConfig {
    TrainConfig { learning_rate: 0.001, batch_size: 32, max_epochs: 100, patience: 10, validation_fraction: 0.1 }
}

const TRAIN_KEYS: [&str; 5] = ["learning_rate", "batch_size", "max_epochs", "patience", "activation"];

impl SequenceParams {
    pub fn lstm(layers: usize, units: usize) -> Self {
        Self { conv: None, units: vec![units; layers], activation: CellActivation::Relu, train: default_train() }
    }

    pub fn cnn_lstm(filters: usize, kernel: usize, units: usize) -> Self {
        Self {
            conv: Some(ConvSpec { filters, kernel }),
            units: vec![units],
            activation: CellActivation::Relu,
            train: default_train(),
        }
    }

    pub fn lstm_from_config(cfg: &ModelConfig) -> Result<Self> {
        let mut keys = vec!["layers", "units"];
        keys.extend(TRAIN_KEYS);
        cfg.check_keys(&keys)?;
        let layers = cfg.usize_or("layers", 1)?;
        if layers == 0 {
            return Err(invalid("layers", "must be at least 1"));
        }
        let mut p = Self::lstm(layers, cfg.usize_or("units", 50)?);
        p.read_training(cfg)?;
        Ok(p)
    }

    pub fn cnn_lstm_from_config(cfg: &ModelConfig) -> Result<Self> {
        let mut keys = vec!["filters", "kernel", "units"];
        keys.extend(TRAIN_KEYS);
        cfg.check_keys(&keys)?;
        let mut p =
            Self::cnn_lstm(cfg.usize_or("filters", 32)?, cfg.usize_or("kernel", 3)?, cfg.usize_or("units", 50)?);
        p.read_training(cfg)?;
        Ok(p)
    }

    fn read_training(&mut self, cfg: &ModelConfig) -> Result<()> {
        let d = self.train;
        self.train = TrainConfig {
            learning_rate: cfg.f64_or("learning_rate", d.learning_rate)?,
            batch_size: cfg.usize_or("batch_size", d.batch_size)?,
            max_epochs: cfg.usize_or("max_epochs", d.max_epochs)?,
            patience: cfg.usize_or("patience", d.patience)?,
            validation_fraction: d.validation_fraction,
        };
        self.activation = match cfg.text_or("activation", "relu")? {
            "relu" => CellActivation::Relu,
            "tanh" => CellActivation::Tanh,
            _ => return Err(invalid("activation", "expected relu or tanh")),
        };
        self.train.validate()
    }

    pub fn architecture(&self, window: usize, channels: usize, outputs: usize) -> Architecture {
        Architecture { channels, window, conv: self.conv, units: self.units.clone(), outputs, activation: self.activation }
    }
}

/// A trained recurrent regressor together with its input scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
    /// Per-channel statistics from the training windows.
    pub scaler: Standardizer,
    /// Channel whose statistics scale each output.
    pub target_channels: Vec<usize>,
    pub training: TrainingLog,
}

/// Default output channels: temperature and humidity.
pub fn default_target_channels() -> Vec<usize> {
    vec![Variable::Temp.index(), Variable::Humidity.index()]
}

fn check(x: &SequenceTensor, y: &Matrix, targets: &[usize]) -> Result<()> {
    if x.samples() == 0 {
        return Err(Error::EmptyData);
    }
    if x.samples() != y.rows() {
        return Err(Error::LengthMismatch { left: x.samples(), right: y.rows() });
    }
    if y.cols() != targets.len() {
        return Err(Error::TargetCountMismatch { expected: targets.len(), got: y.cols() });
    }
    if let Some(&c) = targets.iter().find(|&&c| c >= x.channels()) {
        return Err(Error::DimensionMismatch { expected: x.channels(), got: c + 1 });
    }
    Ok(())
}

fn standardize(scaler: &Standardizer, x: &SequenceTensor) -> SequenceTensor {
    let mut z = x.clone();
    for row in z.as_mut_slice().chunks_mut(x.channels()) {
        scaler.transform_row(row);
    }
    z
}

/// Trains on samples in order; the last tenth of them drive early stopping.
pub fn fit_sequence(x: &SequenceTensor, y: &Matrix, params: &SequenceParams, seed: u64) -> Result<SequenceModel> {
    fit_sequence_with_targets(x, y, &default_target_channels(), params, seed)
}

pub fn fit_sequence_with_targets(
    x: &SequenceTensor,
    y: &Matrix,
    target_channels: &[usize],
    params: &SequenceParams,
    seed: u64,
) -> Result<SequenceModel> {
    check(x, y, target_channels)?;
    let arch = params.architecture(x.window(), x.channels(), y.cols());
    arch.validate()?;
    params.train.validate()?;
    let n = x.samples();
    let n_fit = params.train.fit_rows(n)?;
    let scaler = Standardizer::fit_rows(x.as_slice().chunks(x.channels()), x.channels())?;
    let z = standardize(&scaler, x);
    let mut yz = y.clone();
    for i in 0..n {
        for (j, &c) in target_channels.iter().enumerate() {
            yz.set(i, j, (y.get(i, j) - scaler.mean[c]) / scaler.scale[c]);
        }
    }
    let mut flat = arch.init(seed::derive(seed, 0));
    let mut net = arch.network();
    let mut val_net = arch.network();
    let val_rows: Vec<usize> = (n_fit..n).collect();
    let training = nn::train(
        &mut flat,
        n_fit,
        &params.train,
        seed::derive(seed, 1),
        |p, rows, g| net.loss_and_grad(p, &z, &yz, rows, g).unwrap_or(f64::NAN),
        |p| mse(&mut val_net, p, &z, &yz, &val_rows),
    )?;
    Ok(SequenceModel { arch, params: flat, scaler, target_channels: target_channels.to_vec(), training })
}

fn mse(net: &mut super::Network, p: &[f64], x: &SequenceTensor, y: &Matrix, rows: &[usize]) -> f64 {
    let mut total = 0.0;
    for &r in rows {
        match net.forward(p, x.sample(r)) {
            Ok(out) => total += out.iter().zip(y.row(r)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            Err(_) => return f64::NAN,
        }
    }
    total / (rows.len() * y.cols()) as f64
}

impl SequenceModel {
    /// Predictions in the original target units.
    pub fn predict(&self, x: &SequenceTensor) -> Result<Matrix> {
        if x.window() != self.arch.window || x.channels() != self.arch.channels {
            return Err(Error::ShapeMismatch(alloc::format!(
                "windows {}x{}, model expects {}x{}",
                x.window(),
                x.channels(),
                self.arch.window,
                self.arch.channels
            )));
        }
        let z = standardize(&self.scaler, x);
        let mut net = self.arch.network();
        let mut out = Matrix::zeros(x.samples(), self.arch.outputs);
        for i in 0..x.samples() {
            let o = net.forward(&self.params, z.sample(i))?;
            for (j, &c) in self.target_channels.iter().enumerate() {
                out.set(i, j, o[j] * self.scaler.scale[c] + self.scaler.mean[c]);
            }
        }
        Ok(out)
    }

    /// Validation MSE on standardized targets at the kept epoch.
    pub fn best_val_loss(&self) -> f64 {
        self.training.best_val_loss
    }
}
