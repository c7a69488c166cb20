//! Saved models: everything `predict` needs to rebuild the inputs and run the
//! fitted model.

use std::path::Path;

use hourcast_core::data::{ObservationSeries, PhysicalBounds};
use hourcast_core::features::{assemble_matrix, FeatureSpec};
use hourcast_core::model::{Inputs, ModelConfig, ModelFamily};
use hourcast_core::pipeline::FittedModel;
use hourcast_core::sequence::build_windows;
use hourcast_core::{Error, Matrix};
use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::write_atomic;

pub const FORMAT_VERSION: u64 = 1;

/// How the model's inputs are built from a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSpec {
    Features { spec: FeatureSpec },
    Window { length: usize },
}

impl InputSpec {
    /// Inputs for every row with complete history, and each row's target hour.
    pub fn build(&self, series: &ObservationSeries) -> Result<(Inputs, Vec<NaiveDateTime>), Error> {
        match self {
            InputSpec::Features { spec } => {
                let fm = assemble_matrix(series, spec)?;
                Ok((Inputs::Tabular(fm.x), fm.row_timestamps))
            }
            InputSpec::Window { length } => {
                let b = build_windows(series, *length).map_err(|e| match e {
                    Error::SeriesTooShort { window, len } => Error::InsufficientHistory(format!(
                        "{len} rows, a window of {window} needs at least {}",
                        window + 1
                    )),
                    other => other,
                })?;
                Ok((Inputs::Sequence(b.x), b.origins))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u64,
    pub family: ModelFamily,
    pub base_seed: u64,
    pub best_config: ModelConfig,
    pub inputs: InputSpec,
    pub bounds: PhysicalBounds,
    pub model: FittedModel,
}

impl ModelArtifact {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifact serializes")
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        let bad = |e: serde_json::Error| CliError::BadArtifact { path: path.to_path_buf(), message: e.to_string() };
        let mut de = serde_json::Deserializer::from_str(text);
        // tree models nest one level per split
        de.disable_recursion_limit();
        let value = serde_json::Value::deserialize(&mut de).map_err(bad)?;
        let found = value.get("format_version").and_then(serde_json::Value::as_u64);
        if found != Some(FORMAT_VERSION) {
            return Err(CliError::VersionMismatch {
                path: path.to_path_buf(),
                found: found.unwrap_or(0),
                expected: FORMAT_VERSION,
            });
        }
        Self::deserialize(value).map_err(bad)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn predict(&self, series: &ObservationSeries) -> CliResult<(Vec<NaiveDateTime>, Matrix)> {
        let (inputs, stamps) = self.inputs.build(series)?;
        Ok((stamps, self.model.predict(&inputs)?))
    }
}
