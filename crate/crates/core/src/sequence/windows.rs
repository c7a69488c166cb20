use alloc::vec::Vec;
use core::ops::Range;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::{ObservationSeries, Variable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `samples x window x channels`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTensor {
    samples: usize,
    window: usize,
    channels: usize,
    data: Vec<f64>,
}

impl SequenceTensor {
    pub fn new(samples: usize, window: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != samples * window * channels {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} values for {samples}x{window}x{channels}",
                data.len()
            )));
        }
        Ok(Self { samples, window, channels, data })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// The `window x channels` block of sample `i`.
    #[inline]
    pub fn sample(&self, i: usize) -> &[f64] {
        let len = self.window * self.channels;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        let len = self.window * self.channels;
        Self {
            samples: range.len(),
            window: self.window,
            channels: self.channels,
            data: self.data[range.start * len..range.end * len].to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Sliding windows and their one-step-ahead targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceBatch {
    pub x: SequenceTensor,
    /// `(temp, humidity)` at the target hour.
    pub y: Matrix,
    /// Target hour of each sample.
    pub origins: Vec<NaiveDateTime>,
}

/// Channel order of sequence inputs.
pub const SEQUENCE_CHANNELS: [Variable; 7] = Variable::ALL;

/// One sample per target hour `t` in `window..n`, holding rows
/// `t - window .. t - 1` of all seven variables.
pub fn build_windows(series: &ObservationSeries, window: usize) -> Result<SequenceBatch> {
    let n = series.len();
    if window == 0 || window >= n {
        return Err(Error::SeriesTooShort { window, len: n });
    }
    let columns: Vec<Vec<f64>> =
        SEQUENCE_CHANNELS.iter().map(|v| series.complete_column(*v)).collect::<Result<_>>()?;
    let c = columns.len();
    let samples = n - window;
    let mut data = Vec::with_capacity(samples * window * c);
    let mut y = Matrix::zeros(samples, 2);
    for (s, t) in (window..n).enumerate() {
        for row in t - window..t {
            data.extend(columns.iter().map(|col| col[row]));
        }
        y.set(s, 0, columns[Variable::Temp.index()][t]);
        y.set(s, 1, columns[Variable::Humidity.index()][t]);
    }
    let stamps = series.timestamps();
    Ok(SequenceBatch {
        x: SequenceTensor::new(samples, window, c, data)?,
        y,
        origins: stamps[window..].to_vec(),
    })
}
