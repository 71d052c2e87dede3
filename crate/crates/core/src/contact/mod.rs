//! Contact process: every infected vertex recovers at rate 1 and infects
//! each healthy neighbour at rate λ.

mod coupling;
mod exact;
mod graphical;
mod probes;
mod replicas;
mod run;
mod schedule;

use thiserror::Error;

pub use coupling::{coupled_run, coupled_run_initial, CouplingCertificate, PairCheck};
pub use exact::{exact_extinction_means, exact_mean_extinction, EXACT_MAX_VERTICES};
pub use graphical::GraphicalConstruction;
pub use probes::{
    infestation_fraction, infested_check, star_degree_condition, star_retention_curve,
    star_retention_probe, RetentionPoint,
};
pub use replicas::{
    default_horizon, extinction_time_replicas, replica_seed, survival_curve_coupled,
    survival_probability_estimate, ReplicaRecord, SurvivalCurve, SurvivalEstimate,
};
pub use run::{run, Event, EventKind, Observer, RunOutcome, Simulator, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("infection rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("horizon must be non-negative and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("rate {lambda} exceeds the construction's maximum rate {lambda_max}")]
    RateAboveConstruction { lambda: f64, lambda_max: f64 },
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(u32),
    #[error("at least one replica is required")]
    NoReplicas,
    #[error("rates or durations must be nonempty and sorted ascending")]
    Unsorted,
    #[error("initial sets must be nested")]
    NotNested,
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("exact solver handles at most {limit} vertices, got {vertices}")]
    TooLarge { vertices: usize, limit: usize },
    #[error("linear system is singular")]
    Singular,
    #[error("internal error: {0}")]
    Internal(String),
}
