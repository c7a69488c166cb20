use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grow::{canonical_order, FeaturePick, Grower, SplitObjective};
use super::{predict_tree, TreeNode};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig, ParamValue};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SquaredError,
    FriedmanMse,
}

/// Number of candidate features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Fraction(f64),
}

impl MaxFeatures {
    /// Subset size for `d` features, at least one.
    pub fn count(&self, d: usize) -> usize {
        let k = match *self {
            MaxFeatures::Sqrt => math::floor(math::sqrt(d as f64)) as usize,
            MaxFeatures::Log2 => {
                if d == 0 {
                    0
                } else {
                    (usize::BITS - 1 - d.leading_zeros()) as usize
                }
            }
            MaxFeatures::All => d,
            MaxFeatures::Fraction(f) => math::floor(f * d as f64) as usize,
        };
        k.clamp(1, d.max(1))
    }

    pub(crate) fn pick(&self, d: usize) -> FeaturePick {
        match self {
            MaxFeatures::All => FeaturePick::All,
            other => FeaturePick::PerNode(other.count(d)),
        }
    }

    fn parse(v: Option<&ParamValue>, default: MaxFeatures) -> Result<Self> {
        let f = match v {
            None => return Ok(default),
            Some(ParamValue::Text(s)) => match s.as_str() {
                "sqrt" => MaxFeatures::Sqrt,
                "log2" => MaxFeatures::Log2,
                "all" => MaxFeatures::All,
                _ => return Err(invalid("max_features", "expected sqrt, log2, all or a fraction")),
            },
            Some(ParamValue::Null) => MaxFeatures::All,
            Some(ParamValue::Float(f)) => MaxFeatures::Fraction(*f),
            Some(ParamValue::Int(1)) => MaxFeatures::Fraction(1.0),
            Some(_) => return Err(invalid("max_features", "expected sqrt, log2, all or a fraction")),
        };
        if let MaxFeatures::Fraction(f) = f {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid("max_features", "fraction must be in (0, 1]"));
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
}

impl Default for DtParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_leaf: 1, criterion: Criterion::SquaredError, max_features: MaxFeatures::All }
    }
}

impl DtParams {
    pub const KEYS: &'static [&'static str] = &["max_depth", "min_samples_leaf", "criterion", "max_features"];

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        cfg.check_keys(Self::KEYS)?;
        let d = Self::default();
        let criterion = match cfg.text_or("criterion", "squared_error")? {
            "squared_error" => Criterion::SquaredError,
            "friedman_mse" => Criterion::FriedmanMse,
            _ => return Err(invalid("criterion", "expected squared_error or friedman_mse")),
        };
        let p = Self {
            max_depth: cfg.opt_usize_or("max_depth", d.max_depth)?,
            min_samples_leaf: cfg.usize_or("min_samples_leaf", d.min_samples_leaf)?,
            criterion,
            max_features: MaxFeatures::parse(cfg.get("max_features"), d.max_features)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(invalid("max_depth", "must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(invalid("min_samples_leaf", "must be at least 1"));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid("max_features", "fraction must be in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Per-target sums of `y - offset` over a node, offset being the node mean.
#[derive(Debug, Clone)]
pub(crate) struct SumAcc {
    n: usize,
    sums: Vec<f64>,
    offset: Vec<f64>,
}

pub(crate) struct Variance<'a> {
    pub y: &'a Matrix,
    pub rows: &'a [usize],
    pub criterion: Criterion,
}

impl SplitObjective for Variance<'_> {
    type Acc = SumAcc;

    fn node(&self, members: &[usize]) -> SumAcc {
        let m = self.y.cols();
        let offset: Vec<f64> =
            (0..m).map(|j| math::running_mean(members.iter().map(|&p| self.y.get(self.rows[p], j)))).collect();
        let mut acc = SumAcc { n: 0, sums: vec![0.0; m], offset };
        for &p in members {
            self.add(&mut acc, p);
        }
        acc
    }

    fn empty_like(&self, parent: &SumAcc) -> SumAcc {
        SumAcc { n: 0, sums: vec![0.0; parent.sums.len()], offset: parent.offset.clone() }
    }

    #[inline]
    fn add(&self, acc: &mut SumAcc, pos: usize) {
        let row = self.y.row(self.rows[pos]);
        acc.n += 1;
        for ((s, v), o) in acc.sums.iter_mut().zip(row).zip(&acc.offset) {
            *s += v - o;
        }
    }

    fn gain(&self, left: &SumAcc, parent: &SumAcc) -> f64 {
        let (n, nl) = (parent.n as f64, left.n as f64);
        let nr = n - nl;
        let m = parent.sums.len() as f64;
        let mut total = 0.0;
        for (sl, s) in left.sums.iter().zip(&parent.sums) {
            let sr = s - sl;
            total += match self.criterion {
                Criterion::SquaredError => sl * sl / nl + sr * sr / nr - s * s / n,
                Criterion::FriedmanMse => {
                    let d = sl / nl - sr / nr;
                    nl * nr / n * d * d
                }
            };
        }
        match self.criterion {
            Criterion::SquaredError => total / (n * m),
            Criterion::FriedmanMse => total / m,
        }
    }

    fn leaf(&self, members: &[usize]) -> Vec<f64> {
        (0..self.y.cols())
            .map(|j| {
                let vals = members.iter().map(|&p| self.y.get(self.rows[p], j));
                let (lo, hi) = vals.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                math::running_mean(vals).clamp(lo, hi)
            })
            .collect()
    }
}

pub(crate) fn check_xy(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::EmptyData);
    }
    if x.rows() != y.rows() {
        return Err(Error::LengthMismatch { left: x.rows(), right: y.rows() });
    }
    if y.cols() == 0 {
        return Err(Error::TargetCountMismatch { expected: 1, got: 0 });
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidParam { name: "data".to_string(), reason: "non-finite values".to_string() });
    }
    Ok(())
}

/// Grows one CART tree on the sample positions `rows`.
pub(crate) fn grow_cart(
    x: &Matrix,
    y: &Matrix,
    rows: &[usize],
    max_depth: Option<usize>,
    min_leaf: usize,
    criterion: Criterion,
    pick: FeaturePick,
    seed: u64,
) -> TreeNode {
    let objective = Variance { y, rows, criterion };
    Grower::new(x, rows, objective, max_depth, min_leaf, pick, seed::rng(seed)).grow()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_targets: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn fit(params: &DtParams, x: &Matrix, y: &Matrix, seed: u64) -> Result<Self> {
        fit_decision_tree(x, y, params, seed)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        predict_tree(&self.root, self.n_features, x)
    }
}

pub fn fit_decision_tree(x: &Matrix, y: &Matrix, params: &DtParams, seed: u64) -> Result<DecisionTree> {
    params.validate()?;
    check_xy(x, y)?;
    let rows = canonical_order(x, y);
    let root = grow_cart(
        x,
        y,
        &rows,
        params.max_depth,
        params.min_samples_leaf,
        params.criterion,
        params.max_features.pick(x.cols()),
        seed,
    );
    Ok(DecisionTree { n_features: x.cols(), n_targets: y.cols(), root })
}
