//! Shared exact greedy growth over pre-sorted feature orders.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;

use super::TreeNode;
use crate::matrix::Matrix;
use crate::seed::Rng;

/// Split quality for one node. Positions index the grower's sample list.
pub(crate) trait SplitObjective {
    type Acc: Clone;

    /// Accumulator for a node; may record node-level offsets.
    fn node(&self, members: &[usize]) -> Self::Acc;
    /// Empty accumulator sharing the node's offsets.
    fn empty_like(&self, parent: &Self::Acc) -> Self::Acc;
    fn add(&self, acc: &mut Self::Acc, pos: usize);
    /// Score of splitting `parent` into `left` and its complement.
    fn gain(&self, left: &Self::Acc, parent: &Self::Acc) -> f64;
    fn leaf(&self, members: &[usize]) -> Vec<f64>;
}

/// How candidate features are chosen at each node.
#[derive(Debug, Clone)]
pub(crate) enum FeaturePick {
    All,
    /// A fresh subset of this size at every node.
    PerNode(usize),
    /// The same subset at every node.
    Fixed(Vec<usize>),
}

pub(crate) struct Grower<'a, O> {
    x: &'a Matrix,
    /// Sample position to row of `x`.
    rows: &'a [usize],
    objective: O,
    max_depth: Option<usize>,
    min_leaf: usize,
    pick: FeaturePick,
    rng: Rng,
    goes_left: Vec<bool>,
}

/// Lexicographic order of rows of `x` (then `y`), ties by index. Growing on
/// this order makes fitted trees independent of the input row order.
pub(crate) fn canonical_order(x: &Matrix, y: &Matrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    let lex = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(p, q)| p.total_cmp(q)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    };
    idx.sort_by(|&i, &j| lex(x.row(i), x.row(j)).then_with(|| lex(y.row(i), y.row(j))).then(i.cmp(&j)));
    idx
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b { m } else { a }
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a, O: SplitObjective> Grower<'a, O> {
    pub(crate) fn new(
        x: &'a Matrix,
        rows: &'a [usize],
        objective: O,
        max_depth: Option<usize>,
        min_leaf: usize,
        pick: FeaturePick,
        rng: Rng,
    ) -> Self {
        let goes_left = vec![false; rows.len()];
        Self { x, rows, objective, max_depth, min_leaf: min_leaf.max(1), pick, rng, goes_left }
    }

    #[inline]
    fn value(&self, pos: usize, feature: usize) -> f64 {
        self.x.get(self.rows[pos], feature)
    }

    pub(crate) fn grow(mut self) -> TreeNode {
        let d = self.x.cols();
        let all: Vec<usize> = (0..self.rows.len()).collect();
        let lists: Vec<Vec<usize>> = (0..d)
            .map(|f| {
                let mut order = all.clone();
                order.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)).then(a.cmp(&b)));
                order
            })
            .collect();
        if d == 0 {
            return TreeNode::Leaf { leaf: self.objective.leaf(&all) };
        }
        self.grow_node(lists, 0)
    }

    fn candidates(&mut self, d: usize) -> Vec<usize> {
        match &self.pick {
            FeaturePick::All => (0..d).collect(),
            FeaturePick::Fixed(f) => f.clone(),
            FeaturePick::PerNode(k) if *k >= d => (0..d).collect(),
            FeaturePick::PerNode(k) => {
                let k = (*k).max(1);
                let mut pool: Vec<usize> = (0..d).collect();
                let (chosen, _) = pool.partial_shuffle(&mut self.rng, k);
                let mut chosen = chosen.to_vec();
                chosen.sort_unstable();
                chosen
            }
        }
    }

    fn best_split(&mut self, lists: &[Vec<usize>]) -> Option<Best> {
        let members = &lists[0];
        let n = members.len();
        let parent = self.objective.node(members);
        let mut best: Option<Best> = None;
        for f in self.candidates(lists.len()) {
            let order = &lists[f];
            let mut acc = self.objective.empty_like(&parent);
            for k in 0..n - 1 {
                self.objective.add(&mut acc, order[k]);
                let left_n = k + 1;
                if left_n < self.min_leaf || n - left_n < self.min_leaf {
                    continue;
                }
                let (v, next) = (self.value(order[k], f), self.value(order[k + 1], f));
                if v == next {
                    continue;
                }
                let gain = self.objective.gain(&acc, &parent);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Best { feature: f, threshold: midpoint(v, next), gain });
                }
            }
        }
        best.filter(|b| b.gain > 0.0)
    }

    fn grow_node(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> TreeNode {
        let n = lists[0].len();
        let depth_left = self.max_depth.is_none_or(|m| depth < m);
        if !depth_left || n < 2 * self.min_leaf {
            return TreeNode::Leaf { leaf: self.objective.leaf(&lists[0]) };
        }
        let Some(best) = self.best_split(&lists) else {
            return TreeNode::Leaf { leaf: self.objective.leaf(&lists[0]) };
        };
        for &p in &lists[0] {
            self.goes_left[p] = self.value(p, best.feature) <= best.threshold;
        }
        let goes_left = &self.goes_left;
        let (mut left, mut right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = (Vec::new(), Vec::new());
        for order in lists {
            let (l, r): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&p| goes_left[p]);
            left.push(l);
            right.push(r);
        }
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow_node(left, depth + 1)),
            right: Box::new(self.grow_node(right, depth + 1)),
        }
    }
}
