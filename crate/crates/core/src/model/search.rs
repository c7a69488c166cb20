use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::cv::{time_series_folds, CvScheme, Fold};
use super::dataset::{Dataset, Inputs};
use super::family::ModelFamily;
use super::grid::{HyperGrid, ModelConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics;
use crate::seed::SeedPlan;

/// One (configuration, fold) evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvTask {
    pub config_index: usize,
    pub fold: usize,
    pub train: Range<usize>,
    pub test: Range<usize>,
    pub seed: u64,
}

/// Fold score, or the reason the cell failed.
pub type CellOutcome = core::result::Result<f64, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCell {
    pub config_index: usize,
    pub fold: usize,
    /// Mean of the per-target RMSE; `+inf` for a failed cell.
    pub rmse_avg: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: ModelFamily,
    pub configs: Vec<ModelConfig>,
    /// Config-major, fold-minor.
    pub cells: Vec<ScoreCell>,
    /// Mean fold score per configuration.
    pub mean_scores: Vec<f64>,
    pub best_index: usize,
}

impl GridResult {
    pub fn best(&self) -> &ModelConfig {
        &self.configs[self.best_index]
    }

    pub fn best_score(&self) -> f64 {
        self.mean_scores[self.best_index]
    }
}

/// Mean over target columns of the per-column RMSE.
pub fn score_predictions(y: &Matrix, pred: &Matrix) -> Result<f64> {
    if y.cols() != pred.cols() || y.rows() != pred.rows() {
        return Err(Error::ShapeMismatch(format!(
            "predictions {}x{} for targets {}x{}",
            pred.rows(),
            pred.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let mut total = 0.0;
    for j in 0..y.cols() {
        total += metrics::rmse(&y.column(j), &pred.column(j))?;
    }
    Ok(total / y.cols() as f64)
}

/// The task list for a search, independent of how the tasks are executed.
#[derive(Debug, Clone)]
pub struct GridPlan {
    pub family: ModelFamily,
    pub configs: Vec<ModelConfig>,
    pub folds: Vec<Fold>,
    pub tasks: Vec<CvTask>,
}

impl GridPlan {
    pub fn new(family: ModelFamily, grid: &HyperGrid, n: usize, cv: &CvScheme, seeds: &SeedPlan) -> Result<Self> {
        let configs = grid.configs()?;
        let folds = time_series_folds(n, cv.k)?;
        let mut tasks = Vec::with_capacity(configs.len() * folds.len());
        for c in 0..configs.len() {
            for (f, fold) in folds.iter().enumerate() {
                tasks.push(CvTask {
                    config_index: c,
                    fold: f,
                    train: fold.train.clone(),
                    test: fold.test.clone(),
                    seed: seeds.run_seed(family.name(), c as u32, f as u32),
                });
            }
        }
        Ok(Self { family, configs, folds, tasks })
    }

    /// Fits on the task's training rows and scores its test rows. Only rows
    /// before `task.test.end` are read.
    pub fn run_task<F>(&self, task: &CvTask, data: &Dataset, fit_predict: &F) -> CellOutcome
    where
        F: Fn(&ModelConfig, &Dataset, &Inputs, u64) -> Result<Matrix>,
    {
        let train = data.slice(task.train.clone());
        let test = data.slice(task.test.clone());
        let pred = fit_predict(&self.configs[task.config_index], &train, &test.inputs, task.seed)
            .map_err(|e| e.to_string())?;
        if !pred.is_finite() {
            return Err("non-finite predictions".into());
        }
        score_predictions(&test.y, &pred).map_err(|e| e.to_string())
    }

    /// Aggregates outcomes given in task order. Ties keep the earliest config.
    pub fn finish(self, outcomes: Vec<CellOutcome>) -> Result<GridResult> {
        debug_assert_eq!(outcomes.len(), self.tasks.len());
        let k = self.folds.len();
        let mut cells = Vec::with_capacity(outcomes.len());
        let mut first_error = None;
        for (task, outcome) in self.tasks.iter().zip(outcomes) {
            let (rmse_avg, error) = match outcome {
                Ok(s) if s.is_finite() => (s, None),
                Ok(s) => (f64::INFINITY, Some(format!("score {s}"))),
                Err(e) => (f64::INFINITY, Some(e)),
            };
            if first_error.is_none() {
                first_error.clone_from(&error);
            }
            cells.push(ScoreCell { config_index: task.config_index, fold: task.fold, rmse_avg, error });
        }
        let mean_scores: Vec<f64> = cells
            .chunks(k)
            .map(|c| c.iter().map(|s| s.rmse_avg).sum::<f64>() / k as f64)
            .collect();
        let mut best_index = 0;
        for (i, s) in mean_scores.iter().enumerate() {
            if *s < mean_scores[best_index] {
                best_index = i;
            }
        }
        if !mean_scores[best_index].is_finite() {
            return Err(Error::AllConfigsFailed(first_error.unwrap_or_default()));
        }
        Ok(GridResult { family: self.family, configs: self.configs, cells, mean_scores, best_index })
    }
}

/// Serial grid search over `grid` with expanding-window folds of `data`.
pub fn grid_search<F>(
    family: ModelFamily,
    grid: &HyperGrid,
    data: &Dataset,
    cv: &CvScheme,
    seeds: &SeedPlan,
    fit_predict: F,
) -> Result<GridResult>
where
    F: Fn(&ModelConfig, &Dataset, &Inputs, u64) -> Result<Matrix>,
{
    let plan = GridPlan::new(family, grid, data.len(), cv, seeds)?;
    let outcomes = plan.tasks.iter().map(|t| plan.run_task(t, data, &fit_predict)).collect();
    plan.finish(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::ParamValue;
    use alloc::vec;
    use chrono::{NaiveDate, TimeDelta};

    fn dataset(n: usize) -> Dataset {
        let x: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        let y: Vec<[f64; 2]> = (0..n).map(|i| [i as f64 * 0.5, 3.0]).collect();
        let t0 = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        Dataset::new(
            Inputs::Tabular(Matrix::from_rows(&x).unwrap()),
            Matrix::from_rows(&y).unwrap(),
            (0..n).map(|i| t0 + TimeDelta::hours(i as i64)).collect(),
        )
        .unwrap()
    }

    // predicts a per-config constant offset from the last training target
    fn offset_model(cfg: &ModelConfig, train: &Dataset, eval: &Inputs, _: u64) -> Result<Matrix> {
        let off = cfg.f64_or("offset", 0.0)?;
        if off < 0.0 {
            return Err(Error::EmptyData);
        }
        let last = train.y.row(train.len() - 1).to_vec();
        let rows: Vec<Vec<f64>> = (0..eval.len()).map(|_| last.iter().map(|v| v + off).collect()).collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn singleton_grid() {
        let grid = HyperGrid::new().with("offset", vec![ParamValue::Float(1.0)]);
        let r = grid_search(ModelFamily::Dt, &grid, &dataset(30), &CvScheme::default(), &SeedPlan::default(), offset_model)
            .unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.cells.len(), 5);
    }

    #[test]
    fn failures_score_infinity() {
        let grid = HyperGrid::new().with("offset", vec![(-1.0).into(), 2.0.into(), 0.5.into()]);
        let r = grid_search(ModelFamily::Dt, &grid, &dataset(30), &CvScheme::default(), &SeedPlan::default(), offset_model)
            .unwrap();
        assert!(r.mean_scores[0].is_infinite());
        assert!(r.cells[0].error.is_some());
        assert_eq!(r.best_index, 2);
    }

    #[test]
    fn ties_keep_first() {
        let grid = HyperGrid::new().with("offset", vec![1.0.into(), 1i64.into()]);
        let r = grid_search(ModelFamily::Dt, &grid, &dataset(30), &CvScheme::default(), &SeedPlan::default(), offset_model)
            .unwrap();
        assert_eq!(r.mean_scores[0].to_bits(), r.mean_scores[1].to_bits());
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn all_failing() {
        let grid = HyperGrid::new().with("offset", vec![(-1.0).into()]);
        let r = grid_search(ModelFamily::Dt, &grid, &dataset(30), &CvScheme::default(), &SeedPlan::default(), offset_model);
        assert!(matches!(r, Err(Error::AllConfigsFailed(_))));
    }

    #[test]
    fn plan_seeds_are_per_task() {
        let grid = HyperGrid::new().with("offset", vec![1.0.into(), 2.0.into()]);
        let plan = GridPlan::new(ModelFamily::Dt, &grid, 30, &CvScheme::default(), &SeedPlan::default()).unwrap();
        let mut seeds: Vec<u64> = plan.tasks.iter().map(|t| t.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 10);
    }
}
