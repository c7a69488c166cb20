//! Lagged and rolling-window features over the hourly series.
//!
//! Every derived value at row `t` is computed from observations strictly
//! before `t`; covariates enter unshifted at `t`.

mod explore;
mod standardize;

pub use explore::{histogram, pearson_correlation, CorrelationMatrix, Histogram};
pub use standardize::Standardizer;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::{ObservationSeries, Variable};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Which columns to derive and keep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub targets: Vec<Variable>,
    pub lag_hours: Vec<usize>,
    pub roll_windows: Vec<usize>,
    pub covariates: Vec<Variable>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            targets: vec![Variable::Temp, Variable::Humidity],
            lag_hours: vec![2, 3, 6, 12, 24],
            roll_windows: vec![3, 6, 12, 24],
            covariates: vec![
                Variable::Precip,
                Variable::Windspeed,
                Variable::Sealevelpressure,
                Variable::Cloudcover,
                Variable::Solarradiation,
            ],
        }
    }
}

impl FeatureSpec {
    /// Validated copy with lags and windows sorted ascending and deduplicated.
    pub fn normalized(&self) -> Result<Self> {
        let mut spec = self.clone();
        spec.lag_hours.sort_unstable();
        spec.lag_hours.dedup();
        spec.roll_windows.sort_unstable();
        spec.roll_windows.dedup();
        dedup_keep_order(&mut spec.targets);
        dedup_keep_order(&mut spec.covariates);
        if spec.targets.is_empty() {
            return Err(Error::InvalidFeatureSpec("no targets".into()));
        }
        if spec.lag_hours.is_empty() || spec.roll_windows.is_empty() {
            return Err(Error::InvalidFeatureSpec("lags and windows must be non-empty".into()));
        }
        if spec.lag_hours[0] == 0 {
            return Err(Error::NonPositiveLag);
        }
        if spec.roll_windows[0] < 2 {
            return Err(Error::WindowTooSmall(spec.roll_windows[0]));
        }
        Ok(spec)
    }

    /// Index of the first row whose features are all kept.
    pub fn first_row(&self) -> usize {
        let max_lag = self.lag_hours.iter().copied().max().unwrap_or(0);
        let max_window = self.roll_windows.iter().copied().max().unwrap_or(0);
        max_lag.max(max_window + 1)
    }

    /// Column names in matrix order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.covariates.iter().map(|v| v.name().into()).collect();
        for t in &self.targets {
            names.extend(self.lag_hours.iter().map(|k| lag_name(*k, *t)));
        }
        for t in &self.targets {
            for w in &self.roll_windows {
                names.push(roll_mean_name(*w, *t));
                names.push(roll_std_name(*w, *t));
            }
        }
        names
    }
}

fn dedup_keep_order(v: &mut Vec<Variable>) {
    let mut seen = Vec::new();
    v.retain(|x| {
        let fresh = !seen.contains(x);
        seen.push(*x);
        fresh
    });
}

pub fn lag_name(k: usize, target: Variable) -> String {
    format!("lag_{k}_{target}")
}

pub fn roll_mean_name(w: usize, target: Variable) -> String {
    format!("rollmean_{w}_{target}")
}

pub fn roll_std_name(w: usize, target: Variable) -> String {
    format!("rollstd_{w}_{target}")
}

/// A derived column; `None` where history is insufficient.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// `lag_k[t] = target[t - k]`.
pub fn make_lag_features(
    series: &ObservationSeries,
    target: Variable,
    lag_hours: &[usize],
) -> Result<Vec<FeatureColumn>> {
    let values = series.complete_column(target)?;
    lag_hours.iter().map(|&k| lag_column(&values, k, target)).collect()
}

fn lag_column(values: &[f64], k: usize, target: Variable) -> Result<FeatureColumn> {
    if k == 0 {
        return Err(Error::NonPositiveLag);
    }
    if k >= values.len() {
        return Err(Error::LagOutOfRange { lag: k, len: values.len() });
    }
    let col = (0..values.len()).map(|t| t.checked_sub(k).map(|s| values[s])).collect();
    Ok(FeatureColumn { name: lag_name(k, target), values: col })
}

/// Sample mean and standard deviation over `target[t-w .. t-1]`, returned as
/// a `rollmean` column followed by a `rollstd` column per window.
pub fn make_rolling_features(
    series: &ObservationSeries,
    target: Variable,
    roll_windows: &[usize],
) -> Result<Vec<FeatureColumn>> {
    let values = series.complete_column(target)?;
    let mut out = Vec::with_capacity(2 * roll_windows.len());
    for &w in roll_windows {
        let (mean, std) = rolling_columns(&values, w)?;
        out.push(FeatureColumn { name: roll_mean_name(w, target), values: mean });
        out.push(FeatureColumn { name: roll_std_name(w, target), values: std });
    }
    Ok(out)
}

type OptColumn = Vec<Option<f64>>;

fn rolling_columns(values: &[f64], w: usize) -> Result<(OptColumn, OptColumn)> {
    if w < 2 {
        return Err(Error::WindowTooSmall(w));
    }
    let mut mean = vec![None; values.len()];
    let mut std = vec![None; values.len()];
    for t in w..values.len() {
        let window = &values[t - w..t];
        let m = window.iter().sum::<f64>() / w as f64;
        let ss: f64 = window.iter().map(|v| (v - m) * (v - m)).sum();
        mean[t] = Some(m);
        std[t] = Some(math::sqrt(ss / (w - 1) as f64));
    }
    Ok((mean, std))
}

/// Aligned design matrix with its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub row_timestamps: Vec<NaiveDateTime>,
    /// Position of each row in the source series.
    pub row_index: Vec<usize>,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub x: Matrix,
    pub y: Matrix,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn slice(&self, range: core::ops::Range<usize>) -> Self {
        Self {
            row_timestamps: self.row_timestamps[range.clone()].to_vec(),
            row_index: self.row_index[range.clone()].to_vec(),
            feature_names: self.feature_names.clone(),
            target_names: self.target_names.clone(),
            x: self.x.slice_rows(range.clone()),
            y: self.y.slice_rows(range),
        }
    }

    /// Chronological train/test split at `floor(ratio * n)`.
    pub fn split(&self, ratio: f64) -> Result<(Self, Self)> {
        let k = crate::data::split_point(self.len(), ratio)?;
        Ok((self.slice(0..k), self.slice(k..self.len())))
    }
}

/// Builds `[covariates | lags | rolling stats]` and drops rows without full
/// history. Rows start at `spec.first_row()`.
pub fn assemble_matrix(series: &ObservationSeries, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let spec = spec.normalized()?;
    let n = series.len();
    let start = spec.first_row();
    if start >= n {
        return Err(Error::InsufficientHistory(format!(
            "{n} rows, features need at least {}",
            start + 1
        )));
    }

    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for v in &spec.covariates {
        columns.push(series.complete_column(*v)?.into_iter().map(Some).collect());
    }
    for t in &spec.targets {
        columns.extend(make_lag_features(series, *t, &spec.lag_hours)?.into_iter().map(|c| c.values));
    }
    for t in &spec.targets {
        columns.extend(make_rolling_features(series, *t, &spec.roll_windows)?.into_iter().map(|c| c.values));
    }
    let targets: Vec<Vec<f64>> =
        spec.targets.iter().map(|t| series.complete_column(*t)).collect::<Result<_>>()?;

    let rows = n - start;
    let d = columns.len();
    let mut x = Matrix::zeros(rows, d);
    let mut y = Matrix::zeros(rows, targets.len());
    for (r, t) in (start..n).enumerate() {
        for (j, col) in columns.iter().enumerate() {
            let v = col[t].ok_or_else(|| {
                Error::InsufficientHistory(format!("feature {j} undefined at row {t}"))
            })?;
            x.set(r, j, v);
        }
        for (j, col) in targets.iter().enumerate() {
            y.set(r, j, col[t]);
        }
    }
    let stamps = series.timestamps();
    Ok(FeatureMatrix {
        row_timestamps: stamps[start..].to_vec(),
        row_index: (start..n).collect(),
        feature_names: spec.feature_names(),
        target_names: spec.targets.iter().map(|t| t.name().into()).collect(),
        x,
        y,
    })
}
