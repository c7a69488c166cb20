//! Slow exact reference computations used to verify the fast solvers.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::shallow::dual_objective;

fn group_sse(y: &Matrix, idx: &[usize]) -> f64 {
    (0..y.cols())
        .map(|j| {
            let m = idx.iter().map(|&i| y.get(i, j)).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y.get(i, j) - m) * (y.get(i, j) - m)).sum::<f64>()
        })
        .sum()
}

fn candidate_splits(x: &Matrix, idx: &[usize]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for f in 0..x.cols() {
        let mut v: Vec<f64> = idx.iter().map(|&i| x.get(i, f)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        out.extend(v.windows(2).map(|w| (f, (w[0] + w[1]) / 2.0)));
    }
    out
}

fn partition(x: &Matrix, idx: &[usize], f: usize, t: f64) -> (Vec<usize>, Vec<usize>) {
    idx.iter().partition(|&&i| x.get(i, f) <= t)
}

/// Training SSE of the tree built by trying every split at every node and
/// keeping the best one, down to `depth`.
pub fn greedy_tree_sse(x: &Matrix, y: &Matrix, depth: usize) -> f64 {
    let all: Vec<usize> = (0..x.rows()).collect();
    greedy(x, y, &all, depth)
}

fn greedy(x: &Matrix, y: &Matrix, idx: &[usize], depth: usize) -> f64 {
    let here = group_sse(y, idx);
    if depth == 0 {
        return here;
    }
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for (f, t) in candidate_splits(x, idx) {
        let (l, r) = partition(x, idx, f, t);
        let s = group_sse(y, &l) + group_sse(y, &r);
        if best.as_ref().is_none_or(|b| s < b.0 - 1e-12) {
            best = Some((s, l, r));
        }
    }
    match best {
        Some((s, l, r)) if s < here - 1e-12 => greedy(x, y, &l, depth - 1) + greedy(x, y, &r, depth - 1),
        _ => here,
    }
}

/// Lowest training SSE over every tree of at most `depth` levels.
pub fn optimal_tree_sse(x: &Matrix, y: &Matrix, depth: usize) -> f64 {
    let all: Vec<usize> = (0..x.rows()).collect();
    optimal(x, y, &all, depth)
}

fn optimal(x: &Matrix, y: &Matrix, idx: &[usize], depth: usize) -> f64 {
    let mut best = group_sse(y, idx);
    if depth == 0 {
        return best;
    }
    for (f, t) in candidate_splits(x, idx) {
        let (l, r) = partition(x, idx, f, t);
        best = best.min(optimal(x, y, &l, depth - 1) + optimal(x, y, &r, depth - 1));
    }
    best
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * out[k]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrOptimum {
    pub beta: Vec<f64>,
    /// Known only when some coefficient is strictly inside its box.
    pub bias: Option<f64>,
    pub objective: f64,
}

/// Maximizes the SVR dual by enumerating, for every coefficient, the five
/// states `-C`, free negative, `0`, free positive, `+C`. Free coefficients and
/// the bias come from the stationarity conditions. Cost is `5^n`; keep `n`
/// small.
pub fn svr_dual_optimum(gram: &Matrix, y: &[f64], c: f64, eps: f64) -> Option<SvrOptimum> {
    let n = y.len();
    let mut best: Option<SvrOptimum> = None;
    let mut state = vec![0u8; n];
    for code in 0..5usize.pow(n as u32) {
        let mut rem = code;
        for s in state.iter_mut() {
            *s = (rem % 5) as u8;
            rem /= 5;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1 || state[i] == 3).collect();
        let mut beta: Vec<f64> = state
            .iter()
            .map(|s| match s {
                0 => -c,
                4 => c,
                _ => 0.0,
            })
            .collect();
        let fixed_sum: f64 = beta.iter().sum();
        let mut bias = None;
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                let sign = if state[i] == 3 { 1.0 } else { -1.0 };
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = gram.get(i, j);
                }
                a[r][m] = 1.0;
                let kb: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| gram.get(i, j) * beta[j]).sum();
                b[r] = y[i] - eps * sign - kb;
            }
            a[m][..m].iter_mut().for_each(|v| *v = 1.0);
            b[m] = -fixed_sum;
            let Some(sol) = solve_linear(a, b) else { continue };
            let inside = free.iter().enumerate().all(|(r, &i)| {
                if state[i] == 3 { sol[r] > 0.0 && sol[r] < c } else { sol[r] < 0.0 && sol[r] > -c }
            });
            if !inside {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                beta[i] = sol[r];
            }
            bias = Some(sol[m]);
        }
        let objective = dual_objective(gram, y, eps, &beta);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(SvrOptimum { beta, bias, objective });
        }
    }
    best
}

/// Central differences of `f` at `p` with step `h`.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, p: &[f64], h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|k| {
            q[k] = p[k] + h;
            let up = f(&q);
            q[k] = p[k] - h;
            let down = f(&q);
            q[k] = p[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max |a - b| / max(|a| + |b|, floor)`.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(floor)).fold(0.0, f64::max)
}
