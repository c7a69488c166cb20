use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// A regressor for one target column.
pub trait TargetRegressor: Sized {
    type Params;

    fn fit(params: &Self::Params, x: &Matrix, y: &[f64], seed: u64) -> Result<Self>;
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>>;
}

/// Independent per-target clones of a single-output regressor, sharing
/// hyperparameters. Predictions are stacked in target order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutput<M> {
    pub estimators: Vec<M>,
}

impl<M: TargetRegressor> MultiOutput<M> {
    /// Seed handed to the clone for target `j`.
    pub fn target_seed(seed: u64, j: usize) -> u64 {
        seed::derive(seed, j as u64)
    }

    pub fn fit(params: &M::Params, x: &Matrix, y: &Matrix, seed: u64) -> Result<Self> {
        if y.rows() != x.rows() {
            return Err(Error::LengthMismatch { left: x.rows(), right: y.rows() });
        }
        if y.cols() == 0 {
            return Err(Error::TargetCountMismatch { expected: 1, got: 0 });
        }
        let estimators = (0..y.cols())
            .map(|j| M::fit(params, x, &y.column(j), Self::target_seed(seed, j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { estimators })
    }

    /// Like [`MultiOutput::fit`] but requires exactly `targets` columns.
    pub fn fit_exact(params: &M::Params, x: &Matrix, y: &Matrix, targets: usize, seed: u64) -> Result<Self> {
        if y.cols() != targets {
            return Err(Error::TargetCountMismatch { expected: targets, got: y.cols() });
        }
        Self::fit(params, x, y, seed)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let cols = self.estimators.iter().map(|m| m.predict(x)).collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(&cols)
    }
}

/// Predicts the training mean. Used as a wrapper reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRegressor {
    pub mean: f64,
}

impl TargetRegressor for MeanRegressor {
    type Params = ();

    fn fit(_: &(), _: &Matrix, y: &[f64], _: u64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(Self { mean: y.iter().sum::<f64>() / y.len() as f64 })
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(alloc::vec![self.mean; x.rows()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets() -> (Matrix, Matrix) {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = Matrix::from_rows(&[[9.0, 78.0], [11.0, 82.0], [8.0, 80.0], [12.0, 80.0]]).unwrap();
        (x, y)
    }

    #[test]
    fn mean_baseline_per_target() {
        let (x, y) = targets();
        let m = MultiOutput::<MeanRegressor>::fit_exact(&(), &x, &y, 2, 0).unwrap();
        let p = m.predict(&x).unwrap();
        for i in 0..4 {
            assert_eq!(p.row(i), &[10.0, 80.0]);
        }
    }

    #[test]
    fn single_column_matches_base() {
        let (x, y) = targets();
        let y0 = y.select_columns(&[0]);
        let wrapped = MultiOutput::<MeanRegressor>::fit(&(), &x, &y0, 5).unwrap();
        let base = MeanRegressor::fit(&(), &x, &y0.column(0), MultiOutput::<MeanRegressor>::target_seed(5, 0)).unwrap();
        assert_eq!(wrapped.predict(&x).unwrap().column(0), base.predict(&x).unwrap());
    }

    #[test]
    fn column_permutation_commutes() {
        let (x, y) = targets();
        let a = MultiOutput::<MeanRegressor>::fit(&(), &x, &y, 1).unwrap().predict(&x).unwrap();
        let b = MultiOutput::<MeanRegressor>::fit(&(), &x, &y.select_columns(&[1, 0]), 1)
            .unwrap()
            .predict(&x)
            .unwrap();
        assert_eq!(a.select_columns(&[1, 0]), b);
    }

    #[test]
    fn wrong_target_count() {
        let (x, y) = targets();
        assert_eq!(
            MultiOutput::<MeanRegressor>::fit_exact(&(), &x, &y.select_columns(&[0]), 2, 0).unwrap_err(),
            Error::TargetCountMismatch { expected: 2, got: 1 }
        );
    }
}
