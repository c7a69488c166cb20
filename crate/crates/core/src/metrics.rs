//! Point-forecast error metrics and the per-target report.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Denominator floor for MAPE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub eps: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { eps: f64::EPSILON }
    }
}

fn check(y: &[f64], pred: &[f64]) -> Result<()> {
    if y.len() != pred.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: pred.len() });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn mae(y: &[f64], pred: &[f64]) -> Result<f64> {
    check(y, pred)?;
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], pred: &[f64]) -> Result<f64> {
    check(y, pred)?;
    let mse = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(math::sqrt(mse))
}

/// Coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    pub value: f64,
    /// Set when the observations have zero variance.
    pub degenerate: bool,
}

/// `1 - SS_res / SS_tot`. For constant `y` the score is 1 when every residual
/// is zero and 0 otherwise, with `degenerate` set.
pub fn r2(y: &[f64], pred: &[f64]) -> Result<RSquared> {
    check(y, pred)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b) * (a - b)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        let value = if ss_res == 0.0 { 1.0 } else { 0.0 };
        return Ok(RSquared { value, degenerate: true });
    }
    Ok(RSquared { value: 1.0 - ss_res / ss_tot, degenerate: false })
}

/// Mean absolute percentage error in percent, `|y|` floored at `cfg.eps`.
pub fn mape(y: &[f64], pred: &[f64], cfg: &MetricConfig) -> Result<f64> {
    check(y, pred)?;
    let total: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).abs() / a.abs().max(cfg.eps)).sum();
    Ok(100.0 * total / y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    /// Percent.
    pub mape: f64,
}

impl MetricSet {
    pub fn compute(y: &[f64], pred: &[f64], cfg: &MetricConfig) -> Result<Self> {
        Ok(Self {
            mae: mae(y, pred)?,
            rmse: rmse(y, pred)?,
            r2: r2(y, pred)?.value,
            mape: mape(y, pred, cfg)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.mae.is_finite() && self.rmse.is_finite() && self.r2.is_finite() && self.mape.is_finite()
    }
}

/// Component-wise arithmetic mean of two metric sets.
pub fn average_two_targets(a: &MetricSet, b: &MetricSet) -> MetricSet {
    MetricSet {
        mae: (a.mae + b.mae) / 2.0,
        rmse: (a.rmse + b.rmse) / 2.0,
        r2: (a.r2 + b.r2) / 2.0,
        mape: (a.mape + b.mape) / 2.0,
    }
}

fn average_all(sets: &[MetricSet]) -> MetricSet {
    match sets {
        [a] => *a,
        [a, b] => average_two_targets(a, b),
        _ => {
            let n = sets.len() as f64;
            MetricSet {
                mae: sets.iter().map(|s| s.mae).sum::<f64>() / n,
                rmse: sets.iter().map(|s| s.rmse).sum::<f64>() / n,
                r2: sets.iter().map(|s| s.r2).sum::<f64>() / n,
                mape: sets.iter().map(|s| s.mape).sum::<f64>() / n,
            }
        }
    }
}

/// Metrics for one split: one set per target plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub per_target: Vec<MetricSet>,
    pub average: MetricSet,
}

impl SplitMetrics {
    pub fn from_targets(per_target: Vec<MetricSet>) -> Self {
        let average = average_all(&per_target);
        Self { per_target, average }
    }

    /// Metrics for each column of `y` against the same column of `pred`.
    pub fn compute(y: &Matrix, pred: &Matrix, cfg: &MetricConfig) -> Result<Self> {
        if y.cols() != pred.cols() {
            return Err(Error::TargetCountMismatch { expected: y.cols(), got: pred.cols() });
        }
        let sets = (0..y.cols())
            .map(|j| MetricSet::compute(&y.column(j), &pred.column(j), cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_targets(sets))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub targets: Vec<String>,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
}

/// One line of the flat report: `model,split,target,mae,rmse,r2,mape`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub split: &'static str,
    pub target: String,
    pub metrics: MetricSet,
}

impl EvalReport {
    /// Per-target rows then the `avg` row, train before test.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for (split, m) in [("train", &self.train), ("test", &self.test)] {
            for (t, set) in self.targets.iter().zip(&m.per_target) {
                out.push(ReportRow { model: self.model.clone(), split, target: t.clone(), metrics: *set });
            }
            out.push(ReportRow { model: self.model.clone(), split, target: "avg".into(), metrics: m.average });
        }
        out
    }
}

/// Decimal rounding with ties away from zero, applied to the shortest decimal
/// reading of `v` rather than its binary expansion: `0.7865` renders as
/// `0.787` even though the nearest double is slightly below it.
pub fn round_half_up(v: f64, places: u32) -> f64 {
    let scale = libm::pow(10.0, places as f64);
    let scaled = v * scale;
    let cleaned = math::round(scaled * 1e6) / 1e6;
    let r = if cleaned >= 0.0 { math::floor(cleaned + 0.5) } else { -math::floor(-cleaned + 0.5) };
    r / scale
}

pub fn format_metric(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    format!("{:.3}", round_half_up(v, 3))
}

pub fn format_percent(v: f64) -> String {
    format!("{}%", format_metric(v))
}

pub const REPORT_HEADER: &str = "model,split,target,mae,rmse,r2,mape";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.model,
            r.split,
            r.target,
            format_metric(m.mae),
            format_metric(m.rmse),
            format_metric(m.r2),
            format_percent(m.mape)
        );
    }
    s
}

/// Aligned plain-text table.
pub fn report_table(rows: &[ReportRow]) -> String {
    let header = ["model", "split", "target", "MAE", "RMSE", "R^2", "MAPE"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                r.split.into(),
                r.target.clone(),
                format_metric(r.metrics.mae),
                format_metric(r.metrics.rmse),
                format_metric(r.metrics.r2),
                format_percent(r.metrics.mape),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cols: &[&str]| {
        for (k, (c, w)) in cols.iter().zip(&widths).enumerate() {
            if k < 3 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "{c:>w$}");
            }
            s.push_str(if k + 1 < cols.len() { "  " } else { "\n" });
        }
    };
    line(&mut s, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut s, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &cells {
        line(&mut s, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn identical_vectors() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(r2(&y, &y).unwrap().value, 1.0);
        assert_eq!(mape(&y, &y, &MetricConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn hand_calculated() {
        let y = [1.0, 2.0, 3.0];
        let p = [2.0, 2.0, 2.0];
        assert!((mae(&y, &p).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((rmse(&y, &p).unwrap() - math::sqrt(2.0 / 3.0)).abs() < 1e-12);
        assert!(r2(&y, &p).unwrap().value.abs() < 1e-12);
        assert_eq!(mae(&[0.0], &[3.0]).unwrap(), 3.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
        let m = mape(&[2.0, 4.0], &[1.0, 5.0], &MetricConfig::default()).unwrap();
        assert!((m - 37.5).abs() < 1e-12);
    }

    #[test]
    fn mean_prediction_scores_zero() {
        let y = [3.0, 7.0, 1.0, 9.0];
        assert_eq!(r2(&y, &[5.0; 4]).unwrap().value, 0.0);
    }

    #[test]
    fn constant_target_is_degenerate() {
        let y = [2.0; 3];
        assert_eq!(r2(&y, &y).unwrap(), RSquared { value: 1.0, degenerate: true });
        assert_eq!(r2(&y, &[2.0, 2.0, 2.5]).unwrap(), RSquared { value: 0.0, degenerate: true });
    }

    #[test]
    fn mape_with_zero_actual_is_finite() {
        let m = mape(&[0.0, 1.0], &[0.5, 1.0], &MetricConfig::default()).unwrap();
        assert!(m.is_finite());
    }

    #[test]
    fn input_errors() {
        assert_eq!(mae(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { left: 1, right: 2 }));
        assert_eq!(rmse(&[], &[]), Err(Error::EmptyInput));
        assert_eq!(r2(&[], &[]), Err(Error::EmptyInput));
    }

    #[test]
    fn rounding_follows_decimal_reading() {
        let avg = (0.302 + 1.271) / 2.0;
        assert_eq!(format_metric(avg), "0.787");
        assert_eq!(format_metric(0.0), "0.000");
        assert_eq!(format_percent(2.2795), "2.280%");
        assert_eq!(format_metric(-0.0125), "-0.013");
    }

    #[test]
    fn report_row_layout() {
        let set = MetricSet { mae: 1.0, rmse: 2.0, r2: 0.5, mape: 3.0 };
        let report = EvalReport {
            model: "dt".into(),
            targets: vec!["temp".into(), "humidity".into()],
            train: SplitMetrics::from_targets(vec![set, set]),
            test: SplitMetrics::from_targets(vec![set, set]),
        };
        let rows = report.rows();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.target == "avg").count(), 2);
        let csv = report_csv(&rows);
        assert!(csv.starts_with("model,split,target,mae,rmse,r2,mape\n"));
        assert!(csv.contains("dt,train,temp,1.000,2.000,0.500,3.000%"));
        let table = report_table(&rows);
        assert_eq!(table.lines().count(), 8);
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..50).prop_flat_map(|n| {
            (proptest::collection::vec(-100.0f64..100.0, n), proptest::collection::vec(-100.0f64..100.0, n))
        })
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae((y, p) in arb_pair()) {
            prop_assert!(rmse(&y, &p).unwrap() >= mae(&y, &p).unwrap() - 1e-12);
        }

        #[test]
        fn translation_invariance((y, p) in arb_pair(), c in -50.0f64..50.0) {
            let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
            let ps: Vec<f64> = p.iter().map(|v| v + c).collect();
            prop_assert!((mae(&y, &p).unwrap() - mae(&ys, &ps).unwrap()).abs() < 1e-9);
            prop_assert!((rmse(&y, &p).unwrap() - rmse(&ys, &ps).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn permutation_invariance((y, p) in arb_pair()) {
            let cfg = MetricConfig::default();
            let a = MetricSet::compute(&y, &p, &cfg).unwrap();
            let yr: Vec<f64> = y.iter().rev().copied().collect();
            let pr: Vec<f64> = p.iter().rev().copied().collect();
            let b = MetricSet::compute(&yr, &pr, &cfg).unwrap();
            prop_assert!((a.mae - b.mae).abs() < 1e-9);
            prop_assert!((a.rmse - b.rmse).abs() < 1e-9);
            prop_assert!((a.r2 - b.r2).abs() < 1e-9);
            prop_assert!((a.mape - b.mape).abs() < 1e-6 * a.mape.max(1.0));
        }

        #[test]
        fn averaging_is_symmetric(a in proptest::array::uniform4(0.0f64..10.0), b in proptest::array::uniform4(0.0f64..10.0)) {
            let x = MetricSet { mae: a[0], rmse: a[1], r2: a[2], mape: a[3] };
            let y = MetricSet { mae: b[0], rmse: b[1], r2: b[2], mape: b[3] };
            prop_assert_eq!(average_two_targets(&x, &y), average_two_targets(&y, &x));
        }
    }
}
