//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in the doubled form over `a = [alpha; alpha*]` by
//! sequential minimal optimization on the maximal violating pair.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::model::{invalid, ModelConfig, TargetRegressor};

const TAU: f64 = 1e-12;

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(rbf(a, b, gamma))
}

#[inline]
fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    math::exp(-gamma * d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub kkt_tol: f64,
    /// Pair-update cap; `None` means `max(100_000, 100 n)`.
    pub max_iter: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1.0, gamma: 0.1, epsilon: 0.1, kkt_tol: 1e-3, max_iter: None }
    }
}

impl SvrParams {
    pub const KEYS: &'static [&'static str] = &["C", "gamma", "epsilon", "kkt_tol", "max_iter"];

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        cfg.check_keys(Self::KEYS)?;
        let d = Self::default();
        let p = Self {
            c: cfg.f64_or("C", d.c)?,
            gamma: cfg.f64_or("gamma", d.gamma)?,
            epsilon: cfg.f64_or("epsilon", d.epsilon)?,
            kkt_tol: cfg.f64_or("kkt_tol", d.kkt_tol)?,
            max_iter: cfg.opt_usize_or("max_iter", d.max_iter)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("C", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be non-negative"));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(invalid("kkt_tol", "must be positive"));
        }
        Ok(())
    }
}

/// `f(x) = sum_i beta_i k(sv_i, x) + bias`. Only points with nonzero
/// coefficients are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub gamma: f64,
    pub support: Matrix,
    pub beta: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    /// Maximal pairwise KKT violation when the solver stopped.
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut f = self.bias;
        for (i, b) in self.beta.iter().enumerate() {
            f += b * rbf(self.support.row(i), row, self.gamma);
        }
        f
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if !self.beta.is_empty() && x.cols() != self.support.cols() {
            return Err(Error::DimensionMismatch { expected: self.support.cols(), got: x.cols() });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

impl TargetRegressor for SvrModel {
    type Params = SvrParams;

    fn fit(params: &SvrParams, x: &Matrix, y: &[f64], _seed: u64) -> Result<Self> {
        fit_svr(x, y, params)
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        SvrModel::predict(self, x)
    }
}

/// Full solver output, including every training coefficient.
#[derive(Debug, Clone)]
pub struct SvrSolution {
    pub beta: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub kkt_violation: f64,
    pub iterations: usize,
    /// Dual objective after each pair update, when requested.
    pub objective_trace: Vec<f64>,
}

/// `-1/2 b'Kb - eps sum|b| + y'b`.
pub fn dual_objective(gram: &Matrix, y: &[f64], epsilon: f64, beta: &[f64]) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        let row = gram.row(i);
        let kb: f64 = row.iter().zip(beta).map(|(k, b)| k * b).sum();
        quad += beta[i] * kb;
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let lin: f64 = y.iter().zip(beta).map(|(a, b)| a * b).sum();
    -0.5 * quad - epsilon * l1 + lin
}

pub fn gram_matrix(x: &Matrix, gamma: f64) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k.set(i, i, 1.0);
        for j in 0..i {
            let v = rbf(x.row(i), x.row(j), gamma);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

pub fn fit_svr(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    params.validate()?;
    check(x, y)?;
    let gram = gram_matrix(x, params.gamma);
    let sol = solve_dual(&gram, y, params, false);
    if !sol.converged {
        log::warn!("svr: stopped after {} updates with KKT violation {:.3e}", sol.iterations, sol.kkt_violation);
    }
    let keep: Vec<usize> = (0..y.len()).filter(|&i| sol.beta[i] != 0.0).collect();
    Ok(SvrModel {
        gamma: params.gamma,
        support: if keep.is_empty() { Matrix::zeros(0, x.cols()) } else { x.select_rows(&keep) },
        beta: keep.iter().map(|&i| sol.beta[i]).collect(),
        bias: sol.bias,
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
        iterations: sol.iterations,
    })
}

fn check(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 || y.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch { left: x.rows(), right: y.len() });
    }
    Ok(())
}

/// SMO on the doubled dual given a precomputed Gram matrix.
pub fn solve_dual(gram: &Matrix, y: &[f64], params: &SvrParams, trace: bool) -> SvrSolution {
    let n = y.len();
    let l = 2 * n;
    let c = params.c;
    let z = |t: usize| if t < n { 1.0 } else { -1.0 };
    let kk = |s: usize, t: usize| gram.get(s % n, t % n);
    let q = |s: usize, t: usize| z(s) * z(t) * kk(s, t);
    let mut a = vec![0.0; l];
    let p: Vec<f64> = (0..l).map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] }).collect();
    let mut g = p.clone();
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(100_000));
    let mut objective_trace = Vec::new();
    let objective = |a: &[f64], g: &[f64]| -> f64 {
        // 1/2 a'Qa + p'a = 1/2 sum a_t (G_t + p_t)
        -0.5 * a.iter().zip(g).zip(&p).map(|((a, g), p)| a * (g + p)).sum::<f64>()
    };
    let mut iterations = 0;
    let mut gap;
    loop {
        let (mut gmax, mut gmax2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..l {
            let up = if z(t) > 0.0 { a[t] < c } else { a[t] > 0.0 };
            let low = if z(t) > 0.0 { a[t] > 0.0 } else { a[t] < c };
            if up && -z(t) * g[t] > gmax {
                gmax = -z(t) * g[t];
                i = t;
            }
            if low && z(t) * g[t] > gmax2 {
                gmax2 = z(t) * g[t];
                j = t;
            }
        }
        gap = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || gap < params.kkt_tol || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (a[i], a[j]);
        let qij = q(i, j);
        if z(i) != z(j) {
            let quad = (kk(i, i) + kk(j, j) + 2.0 * qij).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (kk(i, i) + kk(j, j) - 2.0 * qij).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..l {
            g[t] += q(t, i) * di + q(t, j) * dj;
        }
        if trace {
            objective_trace.push(objective(&a, &g));
        }
    }
    let bias = -rho(&a, &g, c, n);
    let beta = (0..n).map(|t| a[t] - a[t + n]).collect();
    SvrSolution { beta, bias, converged: gap < params.kkt_tol, kkt_violation: gap.max(0.0), iterations, objective_trace }
}

fn rho(a: &[f64], g: &[f64], c: f64, n: usize) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..a.len() {
        let zt = if t < n { 1.0 } else { -1.0 };
        let yg = zt * g[t];
        if a[t] >= c {
            if zt < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if a[t] <= 0.0 {
            if zt > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng as _;

    fn random(n: usize, d: usize, rng: &mut seed::Rng) -> (Matrix, Vec<f64>) {
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
        let y = (0..n).map(|i| x.get(i, 0) * 2.0 + rng.random::<f64>() - 0.5).collect();
        (x, y)
    }

    fn qp_oracle(k: &Matrix, y: &[f64], c: f64, eps: f64) -> f64 {
        crate::reference::svr_dual_optimum(k, y, c, eps).expect("a feasible point exists").objective
    }

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), 1.0);
        assert!((rbf_kernel(&[0.0], &[1.0], 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let mut rng = seed::rng(1);
        for _ in 0..20 {
            let a: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            assert_eq!(rbf_kernel(&a, &b, 0.3).unwrap(), rbf_kernel(&b, &a, 0.3).unwrap());
        }
        assert!(matches!(rbf_kernel(&[0.0], &[0.0, 1.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn matches_brute_force_qp() {
        let mut rng = seed::rng(21);
        for case in 0..40 {
            let n = rng.random_range(2..=7);
            let (x, y) = random(n, 2, &mut rng);
            let c = [0.1, 1.0, 10.0][case % 3];
            let gamma = [0.1, 1.0][case % 2];
            let eps = [0.01, 0.1, 0.2][case % 3];
            let p = SvrParams { c, gamma, epsilon: eps, kkt_tol: 1e-10, max_iter: None };
            let k = gram_matrix(&x, gamma);
            let sol = solve_dual(&k, &y, &p, false);
            assert!(sol.converged);
            let got = dual_objective(&k, &y, eps, &sol.beta);
            let want = qp_oracle(&k, &y, c, eps);
            assert!((got - want).abs() < 1e-6, "case {case}: {got} vs {want}");
        }
    }

    #[test]
    fn default_tolerance_is_close_to_optimum() {
        let mut rng = seed::rng(22);
        for _ in 0..10 {
            let (x, y) = random(6, 2, &mut rng);
            let p = SvrParams { c: 10.0, gamma: 1.0, epsilon: 0.1, ..SvrParams::default() };
            let k = gram_matrix(&x, 1.0);
            let sol = solve_dual(&k, &y, &p, false);
            let got = dual_objective(&k, &y, 0.1, &sol.beta);
            assert!((got - qp_oracle(&k, &y, 10.0, 0.1)).abs() < 1e-3);
        }
    }

    #[test]
    fn constraints_and_monotone_objective() {
        let mut rng = seed::rng(23);
        let (x, y) = random(60, 3, &mut rng);
        let p = SvrParams { c: 5.0, gamma: 0.5, epsilon: 0.05, ..SvrParams::default() };
        let k = gram_matrix(&x, 0.5);
        let sol = solve_dual(&k, &y, &p, true);
        assert!(sol.converged && sol.kkt_violation < p.kkt_tol);
        assert!(sol.beta.iter().sum::<f64>().abs() < p.kkt_tol);
        assert!(sol.beta.iter().all(|b| b.abs() <= p.c + 1e-12));
        assert!(sol.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let last = *sol.objective_trace.last().unwrap();
        assert!((last - dual_objective(&k, &y, p.epsilon, &sol.beta)).abs() < 1e-9);
    }

    #[test]
    fn tube_holds_for_interior_points() {
        let mut rng = seed::rng(24);
        let (x, y) = random(40, 2, &mut rng);
        let p = SvrParams { c: 100.0, gamma: 1.0, epsilon: 0.2, ..SvrParams::default() };
        let k = gram_matrix(&x, 1.0);
        let sol = solve_dual(&k, &y, &p, false);
        let m = fit_svr(&x, &y, &p).unwrap();
        let pred = m.predict(&x).unwrap();
        // zero coefficient means the point sits inside or on the tube
        for i in 0..40 {
            if sol.beta[i] == 0.0 {
                assert!((pred[i] - y[i]).abs() <= p.epsilon + p.kkt_tol, "{i}");
            }
        }
    }

    #[test]
    fn constant_target() {
        let mut rng = seed::rng(25);
        let (x, _) = random(15, 2, &mut rng);
        let y = vec![4.5; 15];
        let m = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        assert!(m.beta.is_empty());
        assert!((m.bias - 4.5).abs() < 1e-12);
        assert!(m.predict(&x).unwrap().iter().all(|v| *v == m.bias));
    }

    #[test]
    fn single_point() {
        let x = Matrix::from_rows(&[[0.3, -1.0]]).unwrap();
        let m = fit_svr(&x, &[2.0], &SvrParams { epsilon: 0.0, ..SvrParams::default() }).unwrap();
        assert!(m.beta.is_empty());
        assert_eq!(m.predict(&Matrix::from_rows(&[[5.0, 5.0]]).unwrap()).unwrap(), vec![2.0]);
    }

    #[test]
    fn duplicated_support_vector_is_linear() {
        let mut rng = seed::rng(26);
        let (x, y) = random(20, 2, &mut rng);
        let m = fit_svr(&x, &y, &SvrParams { c: 10.0, ..SvrParams::default() }).unwrap();
        assert!(!m.beta.is_empty());
        let mut split = m.clone();
        split.support = m.support.vstack(&m.support.slice_rows(0..1)).unwrap();
        split.beta[0] = m.beta[0] / 2.0;
        split.beta.push(m.beta[0] / 2.0);
        let (a, b) = (m.predict(&x).unwrap(), split.predict(&x).unwrap());
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn iteration_cap_flags_model() {
        let mut rng = seed::rng(27);
        let (x, y) = random(30, 2, &mut rng);
        let p = SvrParams { c: 100.0, gamma: 1.0, epsilon: 0.01, kkt_tol: 1e-12, max_iter: Some(3) };
        let m = fit_svr(&x, &y, &p).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
        assert!(m.kkt_violation > 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_svr(&Matrix::zeros(0, 1), &[], &SvrParams::default()), Err(Error::EmptyData)));
        assert!(fit_svr(&Matrix::zeros(2, 1), &[1.0, 2.0], &SvrParams { c: 0.0, ..SvrParams::default() }).is_err());
        let cfg = ModelConfig::default().with("C", 10i64).with("gamma", 0.01).with("epsilon", 0.1);
        assert_eq!(SvrParams::from_config(&cfg).unwrap().c, 10.0);
    }
}
