use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    IntList(Vec<i64>),
    Null,
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.into())
    }
}

impl From<Vec<i64>> for ParamValue {
    fn from(v: Vec<i64>) -> Self {
        ParamValue::IntList(v)
    }
}

/// A concrete assignment of hyperparameters. Absent keys take family defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelConfig(pub BTreeMap<String, ParamValue>);

pub(crate) fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParam { name: name.into(), reason: reason.into() }
}

impl ModelConfig {
    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.0.insert(name.into(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(_) => Err(invalid(name, "expected a number")),
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(invalid(name, "expected a non-negative integer")),
        }
    }

    /// Integer, or `null` for "unbounded".
    pub fn opt_usize_or(&self, name: &str, default: Option<usize>) -> Result<Option<usize>> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Null) => Ok(None),
            Some(ParamValue::Text(s)) if s == "none" => Ok(None),
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(_) => Err(invalid(name, "expected a non-negative integer or null")),
        }
    }

    pub fn bool_or(&self, name: &str, default: bool) -> Result<bool> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Bool(v)) => Ok(*v),
            Some(_) => Err(invalid(name, "expected true or false")),
        }
    }

    pub fn text_or<'a>(&'a self, name: &str, default: &'a str) -> Result<&'a str> {
        match self.get(name) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(_) => Err(invalid(name, "expected a string")),
        }
    }

    pub fn usize_list_or(&self, name: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(name) {
            None => Ok(default.to_vec()),
            Some(ParamValue::IntList(v)) if v.iter().all(|x| *x >= 0) => {
                Ok(v.iter().map(|x| *x as usize).collect())
            }
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(vec![*v as usize]),
            Some(_) => Err(invalid(name, "expected a list of non-negative integers")),
        }
    }

    /// Rejects keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(invalid(k, &format!("unknown; expected one of {}", known.join(", ")))),
            None => Ok(()),
        }
    }
}

/// Search space: parameter name to candidate values.
///
/// Configurations are enumerated as an odometer over parameter names in
/// lexicographic order, the first name being the slowest digit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperGrid(pub BTreeMap<String, Vec<ParamValue>>);

impl HyperGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, values: Vec<ParamValue>) -> Self {
        self.0.insert(name.to_string(), values);
        self
    }

    pub fn set(&mut self, name: &str, values: Vec<ParamValue>) {
        self.0.insert(name.to_string(), values);
    }

    /// Number of configurations.
    pub fn size(&self) -> usize {
        self.0.values().map(Vec::len).product()
    }

    pub fn configs(&self) -> Result<Vec<ModelConfig>> {
        if self.0.values().any(Vec::is_empty) {
            return Err(Error::EmptyGrid);
        }
        let names: Vec<&String> = self.0.keys().collect();
        let lists: Vec<&Vec<ParamValue>> = self.0.values().collect();
        let mut digits = vec![0usize; names.len()];
        let mut out = Vec::with_capacity(self.size());
        loop {
            let mut cfg = ModelConfig::default();
            for (k, name) in names.iter().enumerate() {
                cfg.0.insert((*name).clone(), lists[k][digits[k]].clone());
            }
            out.push(cfg);
            let mut pos = names.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < lists[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}
