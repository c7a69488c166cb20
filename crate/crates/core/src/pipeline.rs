//! Family dispatch: turn a configuration into a fitted model, predict, and
//! evaluate against the seasonal-naive baseline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{ObservationSeries, Variable};
use crate::error::{Error, Result};
use crate::features::{assemble_matrix, FeatureSpec, Standardizer};
use crate::matrix::Matrix;
use crate::metrics::{EvalReport, MetricConfig, SplitMetrics};
use crate::model::{Dataset, Inputs, ModelConfig, ModelFamily, MultiOutput};
use crate::sequence::{build_windows, fit_sequence, SequenceModel, SequenceParams};
use crate::shallow::{fit_mlp, MlpModel, MlpParams, SvrModel, SvrParams};
use crate::tree::{DecisionTree, DtParams, GbtModel, GbtParams, RandomForest, RfParams};

/// Hourly period of the naive baseline.
pub const SEASONAL_PERIOD: usize = 24;

pub const SEASONAL_NAIVE: &str = "seasonal_naive";

/// Parsed, validated hyperparameters of one family.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    Svr(SvrParams),
    Mlp(MlpParams),
    Rf(RfParams),
    Dt(DtParams),
    Lstm(SequenceParams),
    CnnLstm(SequenceParams),
    Xgb(GbtParams),
}

impl FamilyParams {
    pub fn parse(family: ModelFamily, cfg: &ModelConfig) -> Result<Self> {
        Ok(match family {
            ModelFamily::Svr => FamilyParams::Svr(SvrParams::from_config(cfg)?),
            ModelFamily::Mlp => FamilyParams::Mlp(MlpParams::from_config(cfg)?),
            ModelFamily::Rf => FamilyParams::Rf(RfParams::from_config(cfg)?),
            ModelFamily::Dt => FamilyParams::Dt(DtParams::from_config(cfg)?),
            ModelFamily::Lstm => FamilyParams::Lstm(SequenceParams::lstm_from_config(cfg)?),
            ModelFamily::CnnLstm => FamilyParams::CnnLstm(SequenceParams::cnn_lstm_from_config(cfg)?),
            ModelFamily::Xgb => FamilyParams::Xgb(GbtParams::from_config(cfg)?),
        })
    }
}

/// A trained model of any family, with whatever scaling it was fit under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Svr { scaler: Standardizer, model: MultiOutput<SvrModel> },
    Mlp { x_scaler: Standardizer, y_scaler: Standardizer, model: MlpModel },
    Rf { model: RandomForest },
    Dt { model: DecisionTree },
    Lstm { model: SequenceModel },
    CnnLstm { model: SequenceModel },
    Xgb { model: MultiOutput<GbtModel> },
}

impl FittedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            FittedModel::Svr { .. } => ModelFamily::Svr,
            FittedModel::Mlp { .. } => ModelFamily::Mlp,
            FittedModel::Rf { .. } => ModelFamily::Rf,
            FittedModel::Dt { .. } => ModelFamily::Dt,
            FittedModel::Lstm { .. } => ModelFamily::Lstm,
            FittedModel::CnnLstm { .. } => ModelFamily::CnnLstm,
            FittedModel::Xgb { .. } => ModelFamily::Xgb,
        }
    }

    pub fn predict(&self, inputs: &Inputs) -> Result<Matrix> {
        match self {
            FittedModel::Svr { scaler, model } => model.predict(&scaler.transform(inputs.tabular()?)?),
            FittedModel::Mlp { x_scaler, y_scaler, model } => {
                y_scaler.inverse_transform(&model.predict(&x_scaler.transform(inputs.tabular()?)?)?)
            }
            FittedModel::Rf { model } => model.predict(inputs.tabular()?),
            FittedModel::Dt { model } => model.predict(inputs.tabular()?),
            FittedModel::Lstm { model } | FittedModel::CnnLstm { model } => model.predict(inputs.sequence()?),
            FittedModel::Xgb { model } => model.predict(inputs.tabular()?),
        }
    }
}

/// Fits `family` under `cfg` on all rows of `data`.
pub fn fit_model(family: ModelFamily, cfg: &ModelConfig, data: &Dataset, seed: u64) -> Result<FittedModel> {
    fit_params(&FamilyParams::parse(family, cfg)?, data, seed)
}

pub fn fit_params(params: &FamilyParams, data: &Dataset, seed: u64) -> Result<FittedModel> {
    let y = &data.y;
    Ok(match params {
        FamilyParams::Svr(p) => {
            let x = data.inputs.tabular()?;
            let scaler = Standardizer::fit(x)?;
            let model = MultiOutput::<SvrModel>::fit(p, &scaler.transform(x)?, y, seed)?;
            FittedModel::Svr { scaler, model }
        }
        FamilyParams::Mlp(p) => {
            let x = data.inputs.tabular()?;
            let x_scaler = Standardizer::fit(x)?;
            let y_scaler = Standardizer::fit(y)?;
            let model = fit_mlp(&x_scaler.transform(x)?, &y_scaler.transform(y)?, p, seed)?;
            FittedModel::Mlp { x_scaler, y_scaler, model }
        }
        FamilyParams::Rf(p) => FittedModel::Rf { model: RandomForest::fit(p, data.inputs.tabular()?, y, seed)? },
        FamilyParams::Dt(p) => FittedModel::Dt { model: DecisionTree::fit(p, data.inputs.tabular()?, y, seed)? },
        FamilyParams::Lstm(p) => FittedModel::Lstm { model: fit_sequence(data.inputs.sequence()?, y, p, seed)? },
        FamilyParams::CnnLstm(p) => {
            FittedModel::CnnLstm { model: fit_sequence(data.inputs.sequence()?, y, p, seed)? }
        }
        FamilyParams::Xgb(p) => FittedModel::Xgb { model: MultiOutput::fit(p, data.inputs.tabular()?, y, seed)? },
    })
}

/// Grid-search callback for `family`: fit on `train`, predict `eval`.
pub fn fit_predict(family: ModelFamily) -> impl Fn(&ModelConfig, &Dataset, &Inputs, u64) -> Result<Matrix> + Sync {
    move |cfg, train, eval, seed| fit_model(family, cfg, train, seed)?.predict(eval)
}

/// Both views of one series, aligned so that row `i` of each targets the same
/// hour.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub tabular: Dataset,
    pub sequence: Dataset,
    /// Position of each row's target hour in the source series.
    pub row_index: Vec<usize>,
    pub targets: Vec<Variable>,
}

impl PreparedData {
    pub fn build(series: &ObservationSeries, spec: &FeatureSpec, window: usize) -> Result<Self> {
        if spec.targets != [Variable::Temp, Variable::Humidity] {
            return Err(Error::InvalidFeatureSpec("targets must be temp, humidity".into()));
        }
        let fm = assemble_matrix(series, spec)?;
        let start = fm.row_index.first().copied().unwrap_or(0).max(window);
        let batch = build_windows(series, window)?;
        let skip_tab = fm.row_index.iter().take_while(|&&r| r < start).count();
        let skip_seq = start - window;
        if skip_tab >= fm.len() {
            return Err(Error::InsufficientHistory(format!("window {window} leaves no rows")));
        }
        let targets = fm.target_names.iter().filter_map(|n| Variable::from_name(n)).collect();
        let row_index = fm.row_index[skip_tab..].to_vec();
        let tabular = Dataset::from(fm.slice(skip_tab..fm.len()));
        let sequence = Dataset::from(batch);
        let sequence = sequence.slice(skip_seq..sequence.len());
        debug_assert_eq!(tabular.timestamps, sequence.timestamps);
        Ok(Self { tabular, sequence, row_index, targets })
    }

    pub fn len(&self) -> usize {
        self.row_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_index.is_empty()
    }

    pub fn for_family(&self, family: ModelFamily) -> &Dataset {
        match family.input_kind() {
            crate::model::InputKind::Tabular => &self.tabular,
            crate::model::InputKind::Sequence => &self.sequence,
        }
    }
}

/// `y_hat[t] = y[t - period]` for each target at each row of `row_index`.
pub fn seasonal_naive(
    series: &ObservationSeries,
    targets: &[Variable],
    row_index: &[usize],
    period: usize,
) -> Result<Matrix> {
    let cols: Vec<Vec<f64>> = targets.iter().map(|t| series.complete_column(*t)).collect::<Result<_>>()?;
    let mut out = Matrix::zeros(row_index.len(), targets.len());
    for (i, &t) in row_index.iter().enumerate() {
        if t < period {
            return Err(Error::InsufficientHistory(format!("row {t} has no value {period} hours earlier")));
        }
        for (j, col) in cols.iter().enumerate() {
            out.set(i, j, col[t - period]);
        }
    }
    Ok(out)
}

/// Train and test predictions with their metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub train_pred: Matrix,
    pub test_pred: Matrix,
}

pub fn evaluate(
    name: &str,
    targets: &[String],
    (train_y, train_pred): (&Matrix, Matrix),
    (test_y, test_pred): (&Matrix, Matrix),
    metrics: &MetricConfig,
) -> Result<Evaluation> {
    let report = EvalReport {
        model: name.into(),
        targets: targets.to_vec(),
        train: SplitMetrics::compute(train_y, &train_pred, metrics)?,
        test: SplitMetrics::compute(test_y, &test_pred, metrics)?,
    };
    Ok(Evaluation { report, train_pred, test_pred })
}

/// Refits `cfg` on the whole training split and scores both splits.
pub fn final_fit_and_evaluate(
    family: ModelFamily,
    cfg: &ModelConfig,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
    metrics: &MetricConfig,
) -> Result<(FittedModel, Evaluation)> {
    let model = fit_model(family, cfg, train, seed)?;
    let train_pred = model.predict(&train.inputs)?;
    let test_pred = model.predict(&test.inputs)?;
    for p in [&train_pred, &test_pred] {
        if !p.is_finite() {
            return Err(Error::ShapeMismatch("model produced non-finite predictions".into()));
        }
    }
    let names: Vec<String> = target_names(train.y.cols());
    let eval = evaluate(family.name(), &names, (&train.y, train_pred), (&test.y, test_pred), metrics)?;
    Ok((model, eval))
}

/// `temp, humidity` for two columns, `y0, y1, ...` otherwise.
pub fn target_names(cols: usize) -> Vec<String> {
    if cols == 2 {
        return alloc::vec![Variable::Temp.name().into(), Variable::Humidity.name().into()];
    }
    (0..cols).map(|j| format!("y{j}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ObservationRecord, VARIABLE_COUNT};
    use crate::model::{grid_search, CvScheme, HyperGrid};
    use crate::seed::SeedPlan;
    use alloc::vec;
    use chrono::{NaiveDate, TimeDelta};

    fn series(n: usize) -> ObservationSeries {
        let t0 = NaiveDate::from_ymd_opt(2024, 6, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let records = (0..n)
            .map(|i| {
                let h = (i % 24) as f64;
                let temp = 20.0 + 5.0 * libm::sin(h / 24.0 * core::f64::consts::TAU) + (i % 5) as f64 * 0.3;
                let mut v = [0.0; VARIABLE_COUNT];
                v[0] = temp;
                v[1] = 80.0 - temp + (i % 3) as f64;
                v[2] = 0.0;
                v[3] = 3.0 + (i % 4) as f64;
                v[4] = 1010.0 + (i % 7) as f64;
                v[5] = (i * 11 % 100) as f64;
                v[6] = (h - 12.0).abs() * 10.0;
                ObservationRecord::complete(t0 + TimeDelta::hours(i as i64), v)
            })
            .collect();
        ObservationSeries::from_records(records).unwrap()
    }

    fn small(family: ModelFamily) -> ModelConfig {
        let c = ModelConfig::default();
        match family {
            ModelFamily::Svr => c.with("C", 1.0).with("gamma", 0.1).with("epsilon", 0.1),
            ModelFamily::Mlp => c.with("hidden_layers", vec![8]).with("max_iter", 30i64),
            ModelFamily::Rf => c.with("n_estimators", 5i64),
            ModelFamily::Dt => c.with("max_depth", 4i64),
            ModelFamily::Lstm => c.with("units", 4i64).with("max_epochs", 3i64),
            ModelFamily::CnnLstm => c.with("filters", 3i64).with("kernel", 3i64).with("units", 4i64).with("max_epochs", 3i64),
            ModelFamily::Xgb => c.with("n_estimators", 10i64).with("max_depth", 3i64),
        }
    }

    #[test]
    fn views_are_aligned() {
        let s = series(120);
        let p = PreparedData::build(&s, &FeatureSpec::default(), 30).unwrap();
        assert_eq!(p.row_index[0], 30);
        assert_eq!(p.tabular.timestamps, p.sequence.timestamps);
        assert_eq!(p.tabular.y, p.sequence.y);
        let p = PreparedData::build(&s, &FeatureSpec::default(), 6).unwrap();
        assert_eq!(p.row_index[0], 25);
    }

    #[test]
    fn every_family_fits_and_round_trips_inputs() {
        let s = series(150);
        let p = PreparedData::build(&s, &FeatureSpec::default(), 8).unwrap();
        for family in ModelFamily::ALL {
            let data = p.for_family(family);
            let (train, test) = data.split(0.8).unwrap();
            let (model, eval) =
                final_fit_and_evaluate(family, &small(family), &train, &test, 7, &MetricConfig::default()).unwrap();
            assert_eq!(model.family(), family);
            assert_eq!(eval.test_pred.rows(), test.len());
            assert_eq!(eval.report.rows().len(), 6);
            let other = match family.input_kind() {
                crate::model::InputKind::Tabular => &p.sequence,
                crate::model::InputKind::Sequence => &p.tabular,
            };
            assert!(matches!(model.predict(&other.inputs), Err(Error::InputKindMismatch(_))));
        }
    }

    #[test]
    fn seasonal_naive_shifts() {
        let s = series(60);
        let temp = s.complete_column(Variable::Temp).unwrap();
        let p = seasonal_naive(&s, &[Variable::Temp], &[24, 40], 24).unwrap();
        assert_eq!(p.column(0), vec![temp[0], temp[16]]);
        assert!(matches!(seasonal_naive(&s, &[Variable::Temp], &[23], 24), Err(Error::InsufficientHistory(_))));
    }

    #[test]
    fn bad_config_is_reported() {
        let cfg = ModelConfig::default().with("depth", 3i64);
        assert!(matches!(FamilyParams::parse(ModelFamily::Dt, &cfg), Err(Error::InvalidParam { .. })));
    }

    #[test]
    fn fold_scores_ignore_later_rows() {
        let s = series(200);
        let p = PreparedData::build(&s, &FeatureSpec::default(), 8).unwrap();
        let grid = HyperGrid::new().with("max_depth", vec![3i64.into(), 5i64.into()]);
        let run = |d: &Dataset| {
            grid_search(ModelFamily::Dt, &grid, d, &CvScheme::default(), &SeedPlan::default(), fit_predict(ModelFamily::Dt))
                .unwrap()
        };
        let base = run(&p.tabular);
        let folds = crate::model::time_series_folds(p.len(), 5).unwrap();
        for (f, fold) in folds.iter().enumerate() {
            let mut noisy = p.tabular.clone();
            for r in fold.test.end..noisy.len() {
                noisy.y.set(r, 0, 1e3 * (r as f64).sin());
                noisy.y.set(r, 1, -50.0);
            }
            let got = run(&noisy);
            for c in 0..2 {
                assert_eq!(got.cells[c * 5 + f].rmse_avg.to_bits(), base.cells[c * 5 + f].rmse_avg.to_bits());
            }
        }
    }
}
