use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Per-column z-scoring with statistics from the training rows.
///
/// Constant columns are stored with `mean = 0, scale = 1` and so pass through
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut mean = Vec::with_capacity(x.cols());
        let mut scale = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            if col.iter().all(|v| *v == col[0]) {
                mean.push(0.0);
                scale.push(1.0);
                continue;
            }
            let (m, var) = math::mean_var(&col);
            let sd = math::sqrt(var);
            mean.push(m);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Ok(Self { mean, scale })
    }

    /// Statistics over the flattened rows of several column blocks.
    pub fn fit_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, cols: usize) -> Result<Self> {
        let data: Vec<f64> = rows.flat_map(|r| r.iter().copied()).collect();
        if data.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Self::fit(&Matrix::from_vec(data.len() / cols, cols, data)?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: cols });
        }
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x.cols())?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.transform_row(out.row_mut(i));
        }
        Ok(out)
    }

    #[inline]
    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z.cols())?;
        let mut out = z.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    /// Restriction to a subset of columns.
    pub fn select(&self, cols: &[usize]) -> Self {
        Self {
            mean: cols.iter().map(|&j| self.mean[j]).collect(),
            scale: cols.iter().map(|&j| self.scale[j]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn two_point_column() {
        let x = Matrix::from_rows(&[[0.0], [10.0]]).unwrap();
        let s = Standardizer::fit(&x).unwrap();
        assert_eq!(s.mean, vec![5.0]);
        assert_eq!(s.scale, vec![5.0]);
        assert_eq!(s.transform(&x).unwrap().column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_column_passes_through() {
        let x = Matrix::from_rows(&[[3.0, 1.0], [3.0, 2.0], [3.0, 4.0]]).unwrap();
        let s = Standardizer::fit(&x).unwrap();
        assert_eq!(s.transform(&x).unwrap().column(0), vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn empty_matrix() {
        assert_eq!(Standardizer::fit(&Matrix::zeros(0, 3)), Err(Error::EmptyMatrix));
    }

    #[test]
    fn dimension_checked() {
        let s = Standardizer::fit(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        assert!(s.transform(&Matrix::zeros(1, 3)).is_err());
    }

    proptest! {
        #[test]
        fn centering_and_round_trip(rows in proptest::collection::vec(
            proptest::collection::vec(-1e3f64..1e3, 3), 2..40)
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let s = Standardizer::fit(&x).unwrap();
            let z = s.transform(&x).unwrap();
            for j in 0..3 {
                let col = x.column(j);
                if col.iter().any(|v| *v != col[0]) {
                    let m = z.column(j).iter().sum::<f64>() / z.rows() as f64;
                    prop_assert!(m.abs() < 1e-10);
                }
            }
            let back = s.inverse_transform(&z).unwrap();
            for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
