//! The uniform model layer: families, hyperparameter grids, time-series
//! cross-validation and grid search.

mod cv;
mod dataset;
mod family;
mod grid;
mod multi;
mod search;

pub use cv::{time_series_folds, CvScheme, Fold};
pub use dataset::{Dataset, Inputs};
pub use family::{InputKind, ModelFamily};
pub use grid::{HyperGrid, ModelConfig, ParamValue};
pub(crate) use grid::invalid;
pub use multi::{MeanRegressor, MultiOutput, TargetRegressor};
pub use search::{grid_search, score_predictions, CellOutcome, CvTask, GridPlan, GridResult, ScoreCell};
