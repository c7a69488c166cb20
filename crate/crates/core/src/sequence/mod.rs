//! Sliding windows over the raw channels and the recurrent regressors.

mod model;
mod net;
mod windows;

pub use model::{default_target_channels, fit_sequence, fit_sequence_with_targets, SequenceModel, SequenceParams};
pub use net::{Architecture, CellActivation, ConvSpec, Network};
pub use windows::{build_windows, SequenceBatch, SequenceTensor, SEQUENCE_CHANNELS};
