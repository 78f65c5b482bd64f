//! Experiment orchestration: configuration, training, evaluation,
//! feature-distribution validation, and saliency export.

pub mod config;
pub mod dpi;
pub mod evalrun;
pub mod saliencyrun;
pub mod trainer;
