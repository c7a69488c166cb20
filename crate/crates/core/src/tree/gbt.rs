use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::cart::check_xy;
use super::grow::{canonical_order, FeaturePick, Grower, SplitObjective};
use super::TreeNode;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig, TargetRegressor};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Initial prediction; the training mean when `None`.
    pub base_score: Option<f64>,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_depth: 6,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            gamma: 0.0,
            lambda: 1.0,
            base_score: None,
        }
    }
}

impl GbtParams {
    pub const KEYS: &'static [&'static str] =
        &["n_estimators", "max_depth", "learning_rate", "subsample", "colsample_bytree", "gamma", "lambda"];

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        cfg.check_keys(Self::KEYS)?;
        let d = Self::default();
        let p = Self {
            n_estimators: cfg.usize_or("n_estimators", d.n_estimators)?,
            max_depth: cfg.usize_or("max_depth", d.max_depth)?,
            learning_rate: cfg.f64_or("learning_rate", d.learning_rate)?,
            subsample: cfg.f64_or("subsample", d.subsample)?,
            colsample_bytree: cfg.f64_or("colsample_bytree", d.colsample_bytree)?,
            gamma: cfg.f64_or("gamma", d.gamma)?,
            lambda: cfg.f64_or("lambda", d.lambda)?,
            base_score: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// `learning_rate = 0` is accepted so that boosting can be switched off.
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(invalid("max_depth", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be a non-negative number"));
        }
        for (name, v) in [("subsample", self.subsample), ("colsample_bytree", self.colsample_bytree)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(name, "must be in (0, 1]"));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("lambda", "must be non-negative"));
        }
        if self.base_score.is_some_and(|b| !b.is_finite()) {
            return Err(invalid("base_score", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct GradAcc {
    g: f64,
    h: f64,
}

/// Squared-error boosting: gradient `F - y`, unit hessian.
struct Regularized<'a> {
    grad: &'a [f64],
    rows: &'a [usize],
    lambda: f64,
    gamma: f64,
}

impl Regularized<'_> {
    fn score(&self, a: GradAcc) -> f64 {
        let d = a.h + self.lambda;
        if d > 0.0 { a.g * a.g / d } else { 0.0 }
    }
}

impl SplitObjective for Regularized<'_> {
    type Acc = GradAcc;

    fn node(&self, members: &[usize]) -> GradAcc {
        let mut acc = GradAcc { g: 0.0, h: 0.0 };
        for &p in members {
            self.add(&mut acc, p);
        }
        acc
    }

    fn empty_like(&self, _: &GradAcc) -> GradAcc {
        GradAcc { g: 0.0, h: 0.0 }
    }

    #[inline]
    fn add(&self, acc: &mut GradAcc, pos: usize) {
        acc.g += self.grad[self.rows[pos]];
        acc.h += 1.0;
    }

    fn gain(&self, left: &GradAcc, parent: &GradAcc) -> f64 {
        let right = GradAcc { g: parent.g - left.g, h: parent.h - left.h };
        0.5 * (self.score(*left) + self.score(right) - self.score(*parent)) - self.gamma
    }

    fn leaf(&self, members: &[usize]) -> Vec<f64> {
        let acc = self.node(members);
        let d = acc.h + self.lambda;
        vec![if d > 0.0 { -acc.g / d } else { 0.0 }]
    }
}

/// Boosted trees for one target. Leaves hold unscaled weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
}

impl GbtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut f = self.base_score;
        for t in &self.trees {
            f += self.learning_rate * t.route(row)[0];
        }
        f
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::FeatureCountMismatch { expected: self.n_features, got: x.cols() });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

impl TargetRegressor for GbtModel {
    type Params = GbtParams;

    fn fit(params: &GbtParams, x: &Matrix, y: &[f64], seed: u64) -> Result<Self> {
        fit_gbt(x, y, params, seed)
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        GbtModel::predict(self, x)
    }
}

pub fn fit_gbt(x: &Matrix, y: &[f64], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    fit_gbt_with_history(x, y, params, seed).map(|(m, _)| m)
}

/// Also returns the training MSE before the first round and after each one.
pub fn fit_gbt_with_history(x: &Matrix, y: &[f64], params: &GbtParams, seed: u64) -> Result<(GbtModel, Vec<f64>)> {
    params.validate()?;
    let ym = Matrix::from_vec(y.len(), 1, y.to_vec())?;
    check_xy(x, &ym)?;
    let (n, d) = (x.rows(), x.cols());
    let order = canonical_order(x, &ym);
    let base = params.base_score.unwrap_or_else(|| math::running_mean(order.iter().map(|&i| y[i])));
    let mut f = vec![base; n];
    let mse = |f: &[f64]| f.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
    let mut history = vec![mse(&f)];
    let n_rows = ((math::floor(params.subsample * n as f64) as usize).max(1)).min(n);
    let n_cols = ((math::floor(params.colsample_bytree * d as f64) as usize).max(1)).min(d.max(1));
    let mut rng = seed::rng(seed);
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut grad = vec![0.0; n];
    for _ in 0..params.n_estimators {
        for i in 0..n {
            grad[i] = f[i] - y[i];
        }
        let rows: Vec<usize> = if n_rows < n {
            let mut pos: Vec<usize> = (0..n).collect();
            let (chosen, _) = pos.partial_shuffle(&mut rng, n_rows);
            chosen.sort_unstable();
            chosen.iter().map(|&p| order[p]).collect()
        } else {
            order.clone()
        };
        let pick = if n_cols < d {
            let mut cols: Vec<usize> = (0..d).collect();
            let (chosen, _) = cols.partial_shuffle(&mut rng, n_cols);
            chosen.sort_unstable();
            FeaturePick::Fixed(chosen.to_vec())
        } else {
            FeaturePick::All
        };
        let objective = Regularized { grad: &grad, rows: &rows, lambda: params.lambda, gamma: params.gamma };
        let tree = Grower::new(x, &rows, objective, Some(params.max_depth), 1, pick, seed::rng(0)).grow();
        for i in 0..n {
            f[i] += params.learning_rate * tree.route(x.row(i))[0];
        }
        history.push(mse(&f));
        trees.push(tree);
    }
    Ok((GbtModel { n_features: d, base_score: base, learning_rate: params.learning_rate, trees }, history))
}
