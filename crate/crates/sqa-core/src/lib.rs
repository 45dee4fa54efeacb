//! Signal-quality assessment for wrist PPG: preprocessing, a from-scratch
//! 1D residual network with squeeze-and-excitation attention, reproducible
//! training, evaluation metrics, and exact model cost accounting.

pub mod accounting;
pub mod dataio;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod training;

pub use error::{Result, SqaError};
pub use rng::SplitMix64;
