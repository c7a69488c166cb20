use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{HyperGrid, ParamValue};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Svr,
    Mlp,
    Rf,
    Dt,
    Lstm,
    CnnLstm,
    Xgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Engineered feature rows.
    Tabular,
    /// Sliding windows over the raw channels.
    Sequence,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 7] = [
        ModelFamily::Svr,
        ModelFamily::Mlp,
        ModelFamily::Rf,
        ModelFamily::Dt,
        ModelFamily::Lstm,
        ModelFamily::CnnLstm,
        ModelFamily::Xgb,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            ModelFamily::Svr => "svr",
            ModelFamily::Mlp => "mlp",
            ModelFamily::Rf => "rf",
            ModelFamily::Dt => "dt",
            ModelFamily::Lstm => "lstm",
            ModelFamily::CnnLstm => "cnn_lstm",
            ModelFamily::Xgb => "xgb",
        }
    }

    /// Families that fit both targets jointly; the rest are wrapped per target.
    pub const fn native_multi_output(self) -> bool {
        !matches!(self, ModelFamily::Svr | ModelFamily::Xgb)
    }

    pub const fn input_kind(self) -> InputKind {
        match self {
            ModelFamily::Lstm | ModelFamily::CnnLstm => InputKind::Sequence,
            _ => InputKind::Tabular,
        }
    }

    /// Whether inputs are z-scored before fitting.
    pub const fn standardizes_inputs(self) -> bool {
        !matches!(self, ModelFamily::Rf | ModelFamily::Dt | ModelFamily::Xgb)
    }

    /// The search space used when no override is given.
    pub fn default_grid(self) -> HyperGrid {
        fn floats(v: &[f64]) -> Vec<ParamValue> {
            v.iter().map(|x| ParamValue::Float(*x)).collect()
        }
        fn ints(v: &[i64]) -> Vec<ParamValue> {
            v.iter().map(|x| ParamValue::Int(*x)).collect()
        }
        let g = HyperGrid::new();
        match self {
            ModelFamily::Svr => g
                .with("C", floats(&[0.1, 1.0, 10.0, 100.0]))
                .with("gamma", floats(&[0.001, 0.01, 0.1, 1.0]))
                .with("epsilon", floats(&[0.01, 0.1, 0.2])),
            ModelFamily::Mlp => g
                .with(
                    "hidden_layers",
                    vec![vec![50].into(), vec![100].into(), vec![50, 50].into(), vec![100, 100].into()],
                )
                .with("alpha", floats(&[0.0005, 0.001, 0.002]))
                .with("learning_rate", floats(&[0.001, 0.005, 0.01])),
            ModelFamily::Rf => g
                .with("n_estimators", ints(&[10, 50, 100]))
                .with("max_features", floats(&[0.3, 0.5, 0.7]))
                .with("min_samples_leaf", ints(&[1, 2, 4]))
                .with("bootstrap", vec![true.into(), false.into()]),
            ModelFamily::Dt => g
                .with("max_depth", ints(&[3, 5, 7, 10]))
                .with("min_samples_leaf", ints(&[1, 2, 4]))
                .with("criterion", vec!["squared_error".into(), "friedman_mse".into()])
                .with("max_features", vec!["sqrt".into(), "log2".into(), "all".into()]),
            ModelFamily::Lstm => g.with("layers", ints(&[1, 2])).with("units", ints(&[50, 100])),
            ModelFamily::CnnLstm => {
                g.with("filters", ints(&[32])).with("kernel", ints(&[3])).with("units", ints(&[50]))
            }
            ModelFamily::Xgb => g
                .with("n_estimators", ints(&[10, 50, 100]))
                .with("max_depth", ints(&[3, 5, 7]))
                .with("learning_rate", floats(&[0.01, 0.1, 0.2]))
                .with("subsample", floats(&[0.7, 0.9]))
                .with("colsample_bytree", floats(&[0.7, 0.9]))
                .with("gamma", floats(&[0.0, 0.1, 0.2])),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFamily(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in ModelFamily::ALL {
            assert_eq!(f.name().parse::<ModelFamily>().unwrap(), f);
        }
        let err = "arima".parse::<ModelFamily>().unwrap_err();
        let msg = alloc::format!("{err}");
        for f in ModelFamily::ALL {
            assert!(msg.contains(f.name()));
        }
    }

    #[test]
    fn capability_flags() {
        let wrapped: Vec<_> = ModelFamily::ALL.into_iter().filter(|f| !f.native_multi_output()).collect();
        assert_eq!(wrapped, vec![ModelFamily::Svr, ModelFamily::Xgb]);
        let seq: Vec<_> =
            ModelFamily::ALL.into_iter().filter(|f| f.input_kind() == InputKind::Sequence).collect();
        assert_eq!(seq, vec![ModelFamily::Lstm, ModelFamily::CnnLstm]);
    }

    #[test]
    fn default_grid_sizes() {
        let sizes: Vec<usize> = ModelFamily::ALL.iter().map(|f| f.default_grid().size()).collect();
        assert_eq!(sizes, vec![48, 36, 54, 72, 4, 1, 324]);
    }
}
