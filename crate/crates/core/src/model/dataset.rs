use alloc::vec::Vec;
use core::ops::Range;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::matrix::Matrix;
use crate::sequence::{SequenceBatch, SequenceTensor};

/// Model inputs: feature rows or windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Inputs {
    Tabular(Matrix),
    Sequence(SequenceTensor),
}

impl Inputs {
    pub fn len(&self) -> usize {
        match self {
            Inputs::Tabular(m) => m.rows(),
            Inputs::Sequence(s) => s.samples(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        match self {
            Inputs::Tabular(m) => Inputs::Tabular(m.slice_rows(range)),
            Inputs::Sequence(s) => Inputs::Sequence(s.slice(range)),
        }
    }

    pub fn tabular(&self) -> Result<&Matrix> {
        match self {
            Inputs::Tabular(m) => Ok(m),
            Inputs::Sequence(_) => Err(Error::InputKindMismatch("expected feature rows")),
        }
    }

    pub fn sequence(&self) -> Result<&SequenceTensor> {
        match self {
            Inputs::Sequence(s) => Ok(s),
            Inputs::Tabular(_) => Err(Error::InputKindMismatch("expected sequence windows")),
        }
    }
}

/// Time-ordered samples: inputs, targets and the target hour of each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Inputs,
    pub y: Matrix,
    pub timestamps: Vec<NaiveDateTime>,
}

impl Dataset {
    pub fn new(inputs: Inputs, y: Matrix, timestamps: Vec<NaiveDateTime>) -> Result<Self> {
        if inputs.len() != y.rows() || y.rows() != timestamps.len() {
            return Err(Error::LengthMismatch { left: inputs.len(), right: y.rows() });
        }
        Ok(Self { inputs, y, timestamps })
    }

    pub fn len(&self) -> usize {
        self.y.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        Self {
            inputs: self.inputs.slice(range.clone()),
            y: self.y.slice_rows(range.clone()),
            timestamps: self.timestamps[range].to_vec(),
        }
    }

    /// Chronological split at `floor(ratio * n)`.
    pub fn split(&self, ratio: f64) -> Result<(Self, Self)> {
        let k = crate::data::split_point(self.len(), ratio)?;
        Ok((self.slice(0..k), self.slice(k..self.len())))
    }
}

impl From<FeatureMatrix> for Dataset {
    fn from(m: FeatureMatrix) -> Self {
        Self { inputs: Inputs::Tabular(m.x), y: m.y, timestamps: m.row_timestamps }
    }
}

impl From<SequenceBatch> for Dataset {
    fn from(b: SequenceBatch) -> Self {
        Self { inputs: Inputs::Sequence(b.x), y: b.y, timestamps: b.origins }
    }
}
