//! Estimators connecting simulation output to the model's exponents.

mod scaling;
pub mod stats;
mod structure;
mod tail;

use thiserror::Error;

pub use scaling::{
    degree_weight_scaling, extinction_scaling_fit, ExtinctionPoint, Predictor, ScalingFit, WeightScalingFit,
    MIN_BIN_COUNT, MIN_SCALING_POINTS,
};
pub use structure::{chemical_distance_sample, largest_component_fraction, DistanceSample, PairScope};
pub use tail::{
    degree_tail_fit, tail_fit, tail_sensitivity, TailEstimator, TailFit, DEFAULT_TAIL_FRACTION, TAIL_FRACTION_SWEEP,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {need} vertices, got {got}")]
    TooFewVertices { need: usize, got: usize },
    #[error("degenerate tail: {0}")]
    DegenerateTail(String),
    #[error("need at least {need} occupied weight bins, got {got}")]
    InsufficientBins { need: usize, got: usize },
    #[error("need at least {need} points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error("every point has a censored median")]
    ExcessiveCensoring,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
