//! The command verbs. Each returns the files it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::NaiveDateTime;
use hourcast_core::data::{split_point, ObservationSeries, Variable};
use hourcast_core::features::{histogram, pearson_correlation};
use hourcast_core::metrics::MetricConfig;
use hourcast_core::model::{CellOutcome, CvScheme, Dataset, GridPlan, GridResult, ModelFamily};
use hourcast_core::pipeline::{
    evaluate, fit_predict, final_fit_and_evaluate, seasonal_naive, target_names, Evaluation, PreparedData,
    SEASONAL_NAIVE, SEASONAL_PERIOD,
};
use hourcast_core::seed::SeedPlan;
use hourcast_core::{synthetic, Matrix};
use rayon::prelude::*;

use crate::artifact::{InputSpec, ModelArtifact, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{format_ts, load_series, read_rows, write_atomic, write_csv, write_series};
use crate::report::{render, ModelOutcome};

pub const REPORTS_DIR: &str = "reports";
pub const SCORES_DIR: &str = "scores";
pub const ARTIFACTS_DIR: &str = "artifacts";
pub const PLOTDATA_DIR: &str = "plotdata";
pub const ANALYSIS_DIR: &str = "analysis";

pub const PREDICTION_HEADER: [&str; 6] =
    ["timestamp", "split", "temp_actual", "temp_pred", "humidity_actual", "humidity_pred"];

pub fn predictions_path(run: &Path, model: &str) -> PathBuf {
    run.join(REPORTS_DIR).join(format!("predictions_{model}.csv"))
}

pub fn artifact_path(run: &Path, family: ModelFamily) -> PathBuf {
    run.join(ARTIFACTS_DIR).join(format!("{family}.json"))
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::InvalidConfig { key: "jobs".into(), reason: e.to_string() })
}

/// Histograms of temperature and humidity and the correlation matrix of all
/// seven variables.
pub fn analyze(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let series = load_series(cfg.data_path()?, &cfg.bounds)?;
    let dir = cfg.out.join(ANALYSIS_DIR);
    let mut written = Vec::new();
    for var in [Variable::Temp, Variable::Humidity] {
        let h = histogram(&series.complete_column(var)?, cfg.bins)?;
        let path = dir.join(format!("hist_{var}.csv"));
        let rows = h.counts.iter().enumerate().map(|(i, c)| {
            [h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()]
        });
        write_csv(&path, &["bin_start", "bin_end", "count"], rows)?;
        written.push(path);
    }
    let cols: Vec<Vec<f64>> = Variable::ALL.iter().map(|v| series.complete_column(*v)).collect::<Result<_, _>>()?;
    let corr = pearson_correlation(&Matrix::from_columns(&cols)?)?;
    let mut header = vec!["variable"];
    header.extend(Variable::ALL.iter().map(|v| v.name()));
    let rows = Variable::ALL.iter().enumerate().map(|(i, v)| {
        let mut row = vec![v.name().to_string()];
        row.extend((0..Variable::ALL.len()).map(|j| corr.r.get(i, j).to_string()));
        row
    });
    let path = dir.join("correlation.csv");
    write_csv(&path, &header, rows)?;
    written.push(path);
    Ok(written)
}

/// Pieces of one family's run, before anything is written.
struct FamilyRun {
    family: ModelFamily,
    search: Result<GridResult, String>,
    fitted: Option<Result<(ModelArtifact, Evaluation), String>>,
}

fn prediction_rows(
    stamps: &[NaiveDateTime],
    split_at: usize,
    y: &Matrix,
    train_pred: &Matrix,
    test_pred: &Matrix,
) -> Vec<[String; 6]> {
    (0..stamps.len())
        .map(|i| {
            let (split, p) =
                if i < split_at { ("train", train_pred.row(i)) } else { ("test", test_pred.row(i - split_at)) };
            [
                format_ts(&stamps[i]),
                split.to_string(),
                y.get(i, 0).to_string(),
                p[0].to_string(),
                y.get(i, 1).to_string(),
                p[1].to_string(),
            ]
        })
        .collect()
}

fn write_scores(path: &Path, r: &GridResult) -> CliResult<()> {
    let rows = r.cells.iter().map(|c| {
        [
            r.family.name().to_string(),
            serde_json::to_string(&r.configs[c.config_index]).expect("config serializes"),
            c.fold.to_string(),
            c.rmse_avg.to_string(),
            c.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(path, &["family", "config_json", "fold", "rmse_avg", "error"], rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSummary {
    pub outcomes: Vec<ModelOutcome>,
    pub written: Vec<PathBuf>,
}

/// Grid search, final refit and evaluation for every requested family, plus
/// the seasonal-naive baseline.
pub fn benchmark(cfg: &RunConfig) -> CliResult<BenchmarkSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let series = load_series(cfg.data_path()?, &cfg.bounds)?;
    let prepared = PreparedData::build(&series, &cfg.features, cfg.window)?;
    let n = prepared.len();
    let k = split_point(n, cfg.split_ratio)?;
    let cv = CvScheme::new(cfg.cv_folds)?;
    let seeds = SeedPlan::new(cfg.seed);
    let metrics = MetricConfig::default();
    let mut families = cfg.models.clone();
    families.sort();
    log::info!("{n} rows ({k} train), families: {families:?}");

    let train: Vec<Dataset> = families.iter().map(|f| prepared.for_family(*f).slice(0..k)).collect();
    let test: Vec<Dataset> = families.iter().map(|f| prepared.for_family(*f).slice(k..n)).collect();
    let plans: Vec<Result<GridPlan, String>> = families
        .iter()
        .map(|f| GridPlan::new(*f, &cfg.grid(*f), k, &cv, &seeds).map_err(|e| e.to_string()))
        .collect();
    let tasks: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .filter_map(|(p, plan)| plan.as_ref().ok().map(|plan| (p, plan.tasks.len())))
        .flat_map(|(p, len)| (0..len).map(move |t| (p, t)))
        .collect();

    let pool = pool(cfg.jobs)?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, t)| {
                let plan = plans[p].as_ref().expect("planned");
                plan.run_task(&plan.tasks[t], &train[p], &fit_predict(plan.family))
            })
            .collect()
    });
    log::info!("cross-validation: {} tasks in {:.1?}", tasks.len(), started.elapsed());

    let mut by_plan: Vec<Vec<CellOutcome>> = vec![Vec::new(); plans.len()];
    for (&(p, _), o) in tasks.iter().zip(outcomes) {
        by_plan[p].push(o);
    }
    let searches: Vec<Result<GridResult, String>> = plans
        .into_iter()
        .zip(by_plan)
        .map(|(plan, outs)| plan.and_then(|plan| plan.finish(outs).map_err(|e| e.to_string())))
        .collect();

    let runs: Vec<FamilyRun> = pool.install(|| {
        families
            .par_iter()
            .zip(searches)
            .enumerate()
            .map(|(i, (&family, search))| {
                let fitted = search.as_ref().ok().map(|r| {
                    let best = r.best().clone();
                    let seed = seeds.final_seed(family.name(), r.best_index as u32);
                    final_fit_and_evaluate(family, &best, &train[i], &test[i], seed, &metrics)
                        .map(|(model, eval)| {
                            let inputs = match family.input_kind() {
                                hourcast_core::model::InputKind::Tabular => {
                                    InputSpec::Features { spec: cfg.features.clone() }
                                }
                                hourcast_core::model::InputKind::Sequence => InputSpec::Window { length: cfg.window },
                            };
                            let artifact = ModelArtifact {
                                format_version: FORMAT_VERSION,
                                family,
                                base_seed: cfg.seed,
                                best_config: best,
                                inputs,
                                bounds: cfg.bounds.clone(),
                                model,
                            };
                            (artifact, eval)
                        })
                        .map_err(|e| e.to_string())
                });
                FamilyRun { family, search, fitted }
            })
            .collect()
    });
    log::info!("final fits done in {:.1?}", started.elapsed());

    let out = &cfg.out;
    let stamps = &prepared.tabular.timestamps;
    let y = &prepared.tabular.y;
    let mut written = Vec::new();
    let mut report = Vec::new();
    for run in &runs {
        let name = run.family.name();
        if let Ok(r) = &run.search {
            let path = out.join(SCORES_DIR).join(format!("{name}.csv"));
            write_scores(&path, r)?;
            written.push(path);
        }
        let fitted = match (&run.search, &run.fitted) {
            (Err(e), _) => Err(e.clone()),
            (Ok(_), Some(f)) => f.clone(),
            (Ok(_), None) => Err("not fitted".to_string()),
        };
        match fitted {
            Ok((artifact, eval)) => {
                let path = artifact_path(out, run.family);
                artifact.save(&path)?;
                written.push(path);
                let path = predictions_path(out, name);
                write_csv(&path, &PREDICTION_HEADER, prediction_rows(stamps, k, y, &eval.train_pred, &eval.test_pred))?;
                written.push(path);
                report.push(ModelOutcome::Evaluated(eval.report));
            }
            Err(reason) => {
                log::warn!("{name} failed: {reason}");
                report.push(ModelOutcome::Failed { model: name.into(), reason });
            }
        }
    }

    let naive = baseline(&series, &prepared, k, &metrics)?;
    let path = predictions_path(out, SEASONAL_NAIVE);
    write_csv(&path, &PREDICTION_HEADER, prediction_rows(stamps, k, y, &naive.train_pred, &naive.test_pred))?;
    written.push(path);
    report.push(ModelOutcome::Evaluated(naive.report));

    let (csv, txt) = render(&report);
    for (file, body) in [("report.csv", csv), ("report.txt", txt)] {
        let path = out.join(REPORTS_DIR).join(file);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    let summary: Vec<serde_json::Value> = runs
        .iter()
        .map(|r| match &r.search {
            Ok(g) => serde_json::json!({
                "family": r.family,
                "best_config": g.best(),
                "cv_rmse_avg": g.best_score(),
                "configs": g.configs.len(),
            }),
            Err(e) => serde_json::json!({ "family": r.family, "error": e }),
        })
        .collect();
    let path = out.join(REPORTS_DIR).join("search.json");
    write_atomic(&path, serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes())?;
    written.push(path);
    log::info!("benchmark finished in {:.1?}", started.elapsed());
    Ok(BenchmarkSummary { outcomes: report, written })
}

fn baseline(series: &ObservationSeries, prepared: &PreparedData, k: usize, metrics: &MetricConfig) -> CliResult<Evaluation> {
    let pred = seasonal_naive(series, &prepared.targets, &prepared.row_index, SEASONAL_PERIOD)?;
    let y = &prepared.tabular.y;
    let n = prepared.len();
    Ok(evaluate(
        SEASONAL_NAIVE,
        &target_names(y.cols()),
        (&y.slice_rows(0..k), pred.slice_rows(0..k)),
        (&y.slice_rows(k..n), pred.slice_rows(k..n)),
        metrics,
    )?)
}

/// Predictions of a saved model for every row of `data` with full history.
pub fn predict(artifact: &Path, data: &Path) -> CliResult<String> {
    let art = ModelArtifact::load(artifact)?;
    let series = load_series(data, &art.bounds)?;
    let (stamps, pred) = art.predict(&series)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Csv { path: data.to_path_buf(), message: e.to_string() };
    w.write_record(["timestamp", "temp_pred", "humidity_pred"]).map_err(csv_err)?;
    for (i, ts) in stamps.iter().enumerate() {
        w.write_record([format_ts(ts), pred.get(i, 0).to_string(), pred.get(i, 1).to_string()]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv { path: data.to_path_buf(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Time-series and scatter files for one model's stored predictions.
pub fn plotdata(run: &Path, model: &str, split: &str) -> CliResult<Vec<PathBuf>> {
    if model != SEASONAL_NAIVE {
        model.parse::<ModelFamily>()?;
    }
    let source = predictions_path(run, model);
    if !source.is_file() {
        return Err(CliError::MissingRunOutput(source));
    }
    let rows: Vec<_> = read_rows(&source)?.into_iter().filter(|r| r.get("split").map(String::as_str) == Some(split)).collect();
    let dir = run.join(PLOTDATA_DIR);
    let mut written = Vec::new();
    for target in ["temp", "humidity"] {
        let pick = |r: &std::collections::BTreeMap<String, String>, col: &str| {
            r.get(&format!("{target}_{col}")).cloned().unwrap_or_default()
        };
        let path = dir.join(format!("{model}_{target}_{split}_series.csv"));
        let series = rows.iter().map(|r| [r.get("timestamp").cloned().unwrap_or_default(), pick(r, "actual"), pick(r, "pred")]);
        write_csv(&path, &["timestamp", "actual", "predicted"], series)?;
        written.push(path);
        let path = dir.join(format!("{model}_{target}_{split}_scatter.csv"));
        write_csv(&path, &["actual", "predicted"], rows.iter().map(|r| [pick(r, "actual"), pick(r, "pred")]))?;
        written.push(path);
    }
    Ok(written)
}

pub fn synth(out: &Path, hours: usize, start: NaiveDateTime, seed: u64) -> CliResult<PathBuf> {
    let series = synthetic::generate(hours, start, seed)?;
    write_series(out, &series)?;
    Ok(out.to_path_buf())
}
