//! Dual-target hourly weather forecasting core.
//!
//! Preprocessing, lag and rolling features, seven regressor families and the
//! expanding-window cross-validated grid search that compares them. The crate
//! is `no_std` and needs only `alloc`; file formats and the command line live
//! in the companion `hourcast` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod features;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod reference;
pub mod seed;
pub mod sequence;
pub mod shallow;
pub mod synthetic;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::Matrix;
