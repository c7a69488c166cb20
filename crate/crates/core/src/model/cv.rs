use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expanding-window cross-validation scored by the mean RMSE over targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvScheme {
    pub k: usize,
}

impl Default for CvScheme {
    fn default() -> Self {
        Self { k: 5 }
    }
}

impl CvScheme {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidFoldCount(k));
        }
        Ok(Self { k })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// `k` folds with equal test blocks of `n / (k + 1)` rows. Fold `i` tests on
/// the `i`-th block from the left (after the first) and trains on everything
/// before it.
pub fn time_series_folds(n: usize, k: usize) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    if n < 2 * (k + 1) {
        return Err(Error::TooFewSamples(format!("{n} rows cannot form {k} time-series folds")));
    }
    let test_size = n / (k + 1);
    Ok((1..=k)
        .map(|i| {
            let start = n - (k - i + 1) * test_size;
            Fold { train: 0..start, test: start..start + test_size }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn twelve_rows_five_folds() {
        let folds = time_series_folds(12, 5).unwrap();
        let expect = vec![(0..2, 2..4), (0..4, 4..6), (0..6, 6..8), (0..8, 8..10), (0..10, 10..12)];
        let got: Vec<_> = folds.into_iter().map(|f| (f.train, f.test)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(time_series_folds(6, 5), Err(Error::TooFewSamples(_))));
        assert_eq!(time_series_folds(100, 1), Err(Error::InvalidFoldCount(1)));
    }

    proptest! {
        #[test]
        fn folds_expand_and_never_leak(k in 2usize..10, extra in 0usize..500) {
            let n = 2 * (k + 1) + extra;
            let folds = time_series_folds(n, k).unwrap();
            prop_assert_eq!(folds.len(), k);
            prop_assert_eq!(folds.last().unwrap().test.end, n);
            for w in folds.windows(2) {
                prop_assert!(w[0].train.end < w[1].train.end);
            }
            for f in &folds {
                prop_assert!(!f.train.is_empty() && !f.test.is_empty());
                prop_assert!(f.train.end - 1 < f.test.start);
            }
        }
    }
}
