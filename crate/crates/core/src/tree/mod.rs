//! Exact greedy regression trees: CART, bagged forests and second-order
//! gradient boosting.

mod cart;
mod forest;
mod gbt;
mod grow;

pub use cart::{fit_decision_tree, Criterion, DecisionTree, DtParams, MaxFeatures};
pub use forest::{fit_random_forest, RandomForest, RfParams};
pub use gbt::{fit_gbt, fit_gbt_with_history, GbtModel, GbtParams};

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A binary regression tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
    Leaf { leaf: Vec<f64> },
}

impl TreeNode {
    /// Leaf value reached by `row`.
    pub fn route(&self, row: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { leaf } => return leaf,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

/// Routes every row of `x` and stacks the leaf values.
pub fn predict_tree(root: &TreeNode, n_features: usize, x: &Matrix) -> Result<Matrix> {
    if x.cols() != n_features {
        return Err(Error::FeatureCountMismatch { expected: n_features, got: x.cols() });
    }
    let rows: Vec<&[f64]> = (0..x.rows()).map(|i| root.route(x.row(i))).collect();
    if rows.is_empty() {
        let width = root.route(&alloc::vec![0.0; n_features]).len();
        return Ok(Matrix::zeros(0, width));
    }
    Matrix::from_rows(&rows)
}
