use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::cart::{check_xy, grow_cart, Criterion, MaxFeatures};
use super::grow::canonical_order;
use super::TreeNode;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_estimators: usize,
    /// Fraction of features examined at each split.
    pub max_features: f64,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { n_estimators: 100, max_features: 1.0, min_samples_leaf: 1, bootstrap: true }
    }
}

impl RfParams {
    pub const KEYS: &'static [&'static str] = &["n_estimators", "max_features", "min_samples_leaf", "bootstrap"];

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        cfg.check_keys(Self::KEYS)?;
        let d = Self::default();
        let p = Self {
            n_estimators: cfg.usize_or("n_estimators", d.n_estimators)?,
            max_features: cfg.f64_or("max_features", d.max_features)?,
            min_samples_leaf: cfg.usize_or("min_samples_leaf", d.min_samples_leaf)?,
            bootstrap: cfg.bool_or("bootstrap", d.bootstrap)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(invalid("n_estimators", "must be at least 1"));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(invalid("max_features", "fraction must be in (0, 1]"));
        }
        if self.min_samples_leaf == 0 {
            return Err(invalid("min_samples_leaf", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub n_targets: usize,
    pub trees: Vec<TreeNode>,
}

impl RandomForest {
    pub fn fit(params: &RfParams, x: &Matrix, y: &Matrix, seed: u64) -> Result<Self> {
        fit_random_forest(x, y, params, seed)
    }

    /// Unweighted mean of the tree predictions.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::FeatureCountMismatch { expected: self.n_features, got: x.cols() });
        }
        let mut out = Matrix::zeros(x.rows(), self.n_targets);
        for i in 0..x.rows() {
            let row = x.row(i);
            let acc = out.row_mut(i);
            for (k, tree) in self.trees.iter().enumerate() {
                let leaf = tree.route(row);
                for (a, v) in acc.iter_mut().zip(leaf) {
                    if k == 0 {
                        *a = *v;
                    } else {
                        *a += (v - *a) / (k + 1) as f64;
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn fit_random_forest(x: &Matrix, y: &Matrix, params: &RfParams, seed: u64) -> Result<RandomForest> {
    params.validate()?;
    check_xy(x, y)?;
    let order = canonical_order(x, y);
    let n = order.len();
    let pick = MaxFeatures::Fraction(params.max_features).pick(x.cols());
    let trees = (0..params.n_estimators)
        .map(|b| {
            let tree_seed = seed::derive(seed, b as u64);
            let rows = if params.bootstrap {
                let mut rng = seed::rng(tree_seed);
                let mut draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                draw.sort_unstable();
                draw.into_iter().map(|p| order[p]).collect()
            } else {
                order.clone()
            };
            grow_cart(x, y, &rows, None, params.min_samples_leaf, Criterion::SquaredError, pick.clone(), tree_seed)
        })
        .collect();
    Ok(RandomForest { n_features: x.cols(), n_targets: y.cols(), trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{fit_decision_tree, DtParams};

    fn noisy_step(n: usize, seed: u64) -> (Matrix, Matrix) {
        let mut rng = seed::rng(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random::<f64>() * 10.0;
            let b: f64 = rng.random::<f64>() * 10.0;
            let base = if a < 3.0 { 1.0 } else if a < 7.0 { 4.0 } else { 2.0 } + if b > 5.0 { 1.5 } else { 0.0 };
            let noise = (rng.random::<f64>() - 0.5) * 3.0;
            xs.push([a, b, rng.random::<f64>()]);
            ys.push([base + noise]);
        }
        (Matrix::from_rows(&xs).unwrap(), Matrix::from_rows(&ys).unwrap())
    }

    fn mse(y: &Matrix, p: &Matrix) -> f64 {
        y.as_slice().iter().zip(p.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.rows() as f64
    }

    #[test]
    fn single_full_tree_equals_decision_tree() {
        let (x, y) = noisy_step(80, 1);
        let p = RfParams { n_estimators: 1, max_features: 1.0, min_samples_leaf: 1, bootstrap: false };
        let rf = fit_random_forest(&x, &y, &p, 4).unwrap();
        let dt = fit_decision_tree(&x, &y, &DtParams::default(), 4).unwrap();
        assert_eq!(rf.trees[0], dt.root);
        assert_eq!(rf.predict(&x).unwrap(), dt.predict(&x).unwrap());
    }

    #[test]
    fn identical_trees_average_exactly() {
        let (x, y) = noisy_step(60, 2);
        let one = RfParams { n_estimators: 1, max_features: 1.0, min_samples_leaf: 2, bootstrap: false };
        let many = RfParams { n_estimators: 7, ..one };
        let a = fit_random_forest(&x, &y, &one, 3).unwrap();
        let b = fit_random_forest(&x, &y, &many, 3).unwrap();
        assert!(b.trees.iter().all(|t| *t == b.trees[0]));
        let (test, _) = noisy_step(40, 9);
        assert_eq!(a.predict(&test).unwrap(), b.predict(&test).unwrap());
    }

    #[test]
    fn constant_target() {
        let (x, _) = noisy_step(30, 3);
        let y = Matrix::from_vec(30, 2, [1.25, -3.0].repeat(30)).unwrap();
        let rf = fit_random_forest(&x, &y, &RfParams { n_estimators: 10, ..RfParams::default() }, 0).unwrap();
        let p = rf.predict(&x).unwrap();
        assert!((0..30).all(|i| p.row(i) == [1.25, -3.0]));
    }

    #[test]
    fn forest_beats_single_tree_on_noise() {
        let (x, y) = noisy_step(300, 4);
        let (xt, yt) = noisy_step(300, 5);
        let dt = fit_decision_tree(&x, &y, &DtParams::default(), 0).unwrap();
        let p = RfParams { n_estimators: 10, max_features: 0.7, min_samples_leaf: 1, bootstrap: true };
        let rf = fit_random_forest(&x, &y, &p, 0).unwrap();
        let (e_dt, e_rf) = (mse(&yt, &dt.predict(&xt).unwrap()), mse(&yt, &rf.predict(&xt).unwrap()));
        assert!(e_rf <= e_dt, "forest {e_rf} tree {e_dt}");
    }

    #[test]
    fn within_training_range_and_order_free() {
        let (x, y) = noisy_step(70, 6);
        let p = RfParams { n_estimators: 5, max_features: 0.5, min_samples_leaf: 2, bootstrap: true };
        let rf = fit_random_forest(&x, &y, &p, 8).unwrap();
        let (lo, hi) = y.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(rf.predict(&x).unwrap().as_slice().iter().all(|v| *v >= lo && *v <= hi));
        let perm: Vec<usize> = (0..70).map(|i| (i * 31) % 70).collect();
        let rf2 = fit_random_forest(&x.select_rows(&perm), &y.select_rows(&perm), &p, 8).unwrap();
        assert_eq!(rf, rf2);
    }

    #[test]
    fn rejects_bad_params() {
        let (x, y) = noisy_step(10, 0);
        assert!(fit_random_forest(&x, &y, &RfParams { n_estimators: 0, ..RfParams::default() }, 0).is_err());
        assert!(fit_random_forest(&x, &y, &RfParams { max_features: 0.0, ..RfParams::default() }, 0).is_err());
    }
}
