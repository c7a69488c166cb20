//! Run configuration: a flat `key = value` file plus `--set` overrides.
//!
//! ```text
//! # comments start with '#'
//! data = weather.csv
//! out = runs/first
//! models = xgb, rf, dt
//! seed = 42
//! jobs = 4
//! split_ratio = 0.8
//! cv_folds = 5
//! window = 24
//! bins = 30
//! bounds.temp = -30, 55
//! features.lags = 2, 3, 6, 12, 24
//! features.windows = 3, 6, 12, 24
//! features.covariates = precip, windspeed, sealevelpressure, cloudcover, solarradiation
//! grid.xgb.max_depth = [3, 5]
//! grid.lstm = {"layers": [1], "units": [16]}
//! ```
//!
//! `grid.<family>.<param>` replaces one axis of the family's default grid;
//! `grid.<family>` replaces the whole grid with a JSON object of arrays.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hourcast_core::data::{PhysicalBounds, Variable};
use hourcast_core::features::FeatureSpec;
use hourcast_core::model::{CvScheme, HyperGrid, ModelFamily, ParamValue};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub models: Vec<ModelFamily>,
    pub seed: u64,
    pub jobs: usize,
    pub split_ratio: f64,
    pub cv_folds: usize,
    pub window: usize,
    pub bins: usize,
    pub bounds: PhysicalBounds,
    pub features: FeatureSpec,
    /// Replacement grids, already merged with the defaults.
    pub grids: BTreeMap<ModelFamily, HyperGrid>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: PathBuf::from("hourcast-out"),
            models: ModelFamily::ALL.to_vec(),
            seed: 42,
            jobs: 1,
            split_ratio: 0.8,
            cv_folds: 5,
            window: 24,
            bins: 30,
            bounds: PhysicalBounds::default(),
            features: FeatureSpec::default(),
            grids: BTreeMap::new(),
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::InvalidConfig { key: key.into(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| bad(key, format!("cannot parse {v:?}")))
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn variable(key: &str, name: &str) -> Result<Variable, CliError> {
    Variable::from_name(name).ok_or_else(|| bad(key, format!("unknown variable {name:?}")))
}

/// Comma-separated family names.
pub fn parse_models(v: &str) -> Result<Vec<ModelFamily>, CliError> {
    let mut out = Vec::new();
    for name in list(v) {
        let f: ModelFamily = name.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(bad("models", "list is empty"));
    }
    Ok(out)
}

fn param_values(key: &str, json: &str) -> Result<Vec<ParamValue>, CliError> {
    let v: serde_json::Value = serde_json::from_str(json).map_err(|e| bad(key, e.to_string()))?;
    let items = match v {
        serde_json::Value::Array(a) => a,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|item| serde_json::from_value(item).map_err(|e| bad(key, e.to_string())))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", n + 1), "expected key = value"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "models" => self.models = parse_models(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            "split_ratio" => self.split_ratio = parse_num(key, value)?,
            "cv_folds" => self.cv_folds = parse_num(key, value)?,
            "window" => self.window = parse_num(key, value)?,
            "bins" => self.bins = parse_num(key, value)?,
            "features.lags" => self.features.lag_hours = list(value).map(|s| parse_num(key, s)).collect::<Result<_, _>>()?,
            "features.windows" => {
                self.features.roll_windows = list(value).map(|s| parse_num(key, s)).collect::<Result<_, _>>()?
            }
            "features.covariates" => {
                self.features.covariates = list(value).map(|s| variable(key, s)).collect::<Result<_, _>>()?
            }
            _ => {
                if let Some(var) = key.strip_prefix("bounds.") {
                    let var = variable(key, var)?;
                    let parts: Vec<f64> = list(value).map(|s| parse_num(key, s)).collect::<Result<_, _>>()?;
                    let [lo, hi] = parts[..] else { return Err(bad(key, "expected lower, upper")) };
                    self.bounds.set(var, lo, hi)?;
                } else if let Some(rest) = key.strip_prefix("grid.") {
                    self.set_grid(key, rest, value)?;
                } else {
                    return Err(bad(key, "unknown key"));
                }
            }
        }
        Ok(())
    }

    fn set_grid(&mut self, key: &str, rest: &str, value: &str) -> Result<(), CliError> {
        let (family, param) = match rest.split_once('.') {
            Some((f, p)) => (f, Some(p)),
            None => (rest, None),
        };
        let family: ModelFamily = family.parse()?;
        match param {
            Some(p) => {
                let values = param_values(key, value)?;
                self.grids.entry(family).or_insert_with(|| family.default_grid()).set(p, values);
            }
            None => {
                let obj: BTreeMap<String, serde_json::Value> =
                    serde_json::from_str(value).map_err(|e| bad(key, e.to_string()))?;
                let mut grid = HyperGrid::new();
                for (p, v) in obj {
                    grid.set(&p, param_values(key, &v.to_string())?);
                }
                self.grids.insert(family, grid);
            }
        }
        Ok(())
    }

    pub fn grid(&self, family: ModelFamily) -> HyperGrid {
        self.grids.get(&family).cloned().unwrap_or_else(|| family.default_grid())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.models.is_empty() {
            return Err(bad("models", "list is empty"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(bad("split_ratio", "must be in (0, 1)"));
        }
        CvScheme::new(self.cv_folds)?;
        if self.jobs == 0 {
            return Err(bad("jobs", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(bad("window", "must be at least 1"));
        }
        self.features.normalized()?;
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path, CliError> {
        self.data.as_deref().ok_or_else(|| bad("data", "no dataset given"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# run\n data = w.csv\nmodels = xgb, dt ,xgb\nseed=7 # inline\nbounds.temp = -10, 40\n\
             features.lags = 24, 2\ngrid.xgb.max_depth = [3, 5]\ngrid.lstm = {\"units\": [8], \"layers\": 1}\n",
        )
        .unwrap();
        assert_eq!(c.data.as_deref(), Some(Path::new("w.csv")));
        assert_eq!(c.models, vec![ModelFamily::Xgb, ModelFamily::Dt]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.bounds.get(Variable::Temp).upper, 40.0);
        assert_eq!(c.features.lag_hours, vec![24, 2]);
        let g = c.grid(ModelFamily::Xgb);
        assert_eq!(g.0["max_depth"], vec![ParamValue::Int(3), ParamValue::Int(5)]);
        assert_eq!(g.size(), 3 * 2 * 3 * 2 * 2 * 3);
        assert_eq!(c.grid(ModelFamily::Lstm).size(), 1);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_family_lists_names() {
        let err = RunConfig::default().set("models", "xgb, arima").unwrap_err().to_string();
        for f in ModelFamily::ALL {
            assert!(err.contains(f.name()), "{err}");
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::default();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("bounds.temp", "5").is_err());
        assert!(c.set("bounds.temp", "5, 1").is_err());
        assert!(c.apply_text("seed 4").is_err());
        c.split_ratio = 1.0;
        assert!(c.validate().is_err());
    }
}
