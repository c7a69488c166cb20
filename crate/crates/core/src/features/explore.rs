use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Pairwise Pearson coefficients of the columns of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub r: Matrix,
    /// `true` for columns with zero variance; their off-diagonal entries are 0.
    pub degenerate: Vec<bool>,
}

pub fn pearson_correlation(x: &Matrix) -> Result<CorrelationMatrix> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let d = x.cols();
    let centered: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| math::sqrt(c.iter().map(|v| v * v).sum())).collect();
    let degenerate: Vec<bool> = norms.iter().map(|s| *s == 0.0).collect();
    let mut r = Matrix::zeros(d, d);
    for i in 0..d {
        r.set(i, i, 1.0);
        for j in i + 1..d {
            let v = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (cov / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            r.set(i, j, v);
            r.set(j, i, v);
        }
    }
    Ok(CorrelationMatrix { r, degenerate })
}

/// Equal-width histogram over `[min, max]`; the last bin includes its right edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::InvalidBinCount);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // degenerate range: unit-width bins starting at the common value
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    if hi > lo {
        edges[bins] = hi;
    }
    let mut counts = vec![0; bins];
    for v in values {
        let k = math::floor((v - lo) / width) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(a: &[f64], b: &[f64]) -> Matrix {
        Matrix::from_columns(&[a.to_vec(), b.to_vec()]).unwrap()
    }

    #[test]
    fn perfect_linear_dependence() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let r = pearson_correlation(&pair(&x, &y)).unwrap();
        assert!((r.r.get(0, 1) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let r = pearson_correlation(&pair(&x, &neg)).unwrap();
        assert!((r.r.get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_flagged() {
        let r = pearson_correlation(&pair(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(r.degenerate, vec![false, true]);
        assert_eq!(r.r.get(0, 1), 0.0);
        assert_eq!(r.r.get(1, 1), 1.0);
    }

    #[test]
    fn too_few_rows() {
        assert_eq!(pearson_correlation(&pair(&[1.0], &[2.0])), Err(Error::TooFewRows(1)));
    }

    #[test]
    fn pressure_anticorrelates_with_temperature() {
        // pressure = -a * temp + noise, with a deterministic pseudo-noise term
        let temp: Vec<f64> = (0..200).map(|i| 15.0 + 8.0 * math::sin(i as f64 / 3.8)).collect();
        let pressure: Vec<f64> = temp
            .iter()
            .enumerate()
            .map(|(i, t)| 1013.0 - 0.6 * t + 1.5 * math::sin(i as f64 * 12.9898))
            .collect();
        let r = pearson_correlation(&pair(&temp, &pressure)).unwrap();
        assert!(r.r.get(0, 1) < 0.0);
    }

    #[test]
    fn two_bins() {
        let h = histogram(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(h.edges, vec![0.0, 1.5, 3.0]);
        assert_eq!(h.counts, vec![2, 2]);
    }

    #[test]
    fn equal_values_single_bin() {
        let h = histogram(&[4.0; 7], 3).unwrap();
        assert_eq!(h.counts, vec![7, 0, 0]);
        assert_eq!(h.edges, vec![4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn histogram_errors() {
        assert_eq!(histogram(&[], 3), Err(Error::EmptyInput));
        assert_eq!(histogram(&[1.0], 0), Err(Error::InvalidBinCount));
    }

    #[test]
    fn skewed_humidity_peaks_in_top_bin() {
        // mass piled near saturation with a thin tail towards dry air
        let values: Vec<f64> = (0..500)
            .map(|i| {
                let u = (i as f64 + 0.5) / 500.0;
                100.0 - 60.0 * u * u * u
            })
            .collect();
        let h = histogram(&values, 10).unwrap();
        let modal = (0..10).max_by_key(|&k| h.counts[k]).unwrap();
        assert_eq!(modal, 9);
    }

    proptest! {
        #[test]
        fn correlation_is_well_formed(rows in proptest::collection::vec(
            proptest::collection::vec(-50.0f64..50.0, 4), 2..30)
        ) {
            let x = Matrix::from_rows(&rows).unwrap();
            let c = pearson_correlation(&x).unwrap();
            for i in 0..4 {
                prop_assert_eq!(c.r.get(i, i), 1.0);
                for j in 0..4 {
                    prop_assert!((c.r.get(i, j) - c.r.get(j, i)).abs() <= 1e-12);
                    prop_assert!(c.r.get(i, j).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn histogram_counts_everything(values in proptest::collection::vec(-1e4f64..1e4, 1..200), bins in 1usize..40) {
            let h = histogram(&values, bins).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<usize>(), values.len());
            prop_assert_eq!(h.edges.len(), bins + 1);
        }
    }
}
