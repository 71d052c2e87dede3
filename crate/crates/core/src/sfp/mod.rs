//! Scale-free percolation graphs restricted to a box.
//!
//! Vertices form a unit-intensity Poisson process in `[0, n^(1/d))^d`, carry
//! i.i.d. Pareto weights with `P(W >= t) = t^(-(tau-1))`, and each pair is
//! joined independently with probability `1 - exp(-rho W_x W_y / |x-y|^alpha)`.

mod accelerated;
mod io;
mod params;
mod sample;

use thiserror::Error;

pub use accelerated::{accelerated_edges, sample_graph_accelerated, AcceleratedOptions};
pub use io::{deserialize_graph, read_graph, serialize_graph, write_graph};
pub use params::{sample_weight, Boundary, SfpParams};
pub use sample::{
    reference_edges, sample_graph_reference, sample_points, sample_rho_coupled, sample_vertices,
    sample_weights, SfpGraph, Vertex, VertexSet, REFERENCE_MAX_EXPECTED_VERTICES,
};

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum SfpError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid vertex table: {0}")]
    InvalidVertices(String),
    #[error("connection probability undefined for coincident points")]
    CoincidentPoints,
    #[error(
        "expected vertex count {volume} exceeds the all-pairs sampler limit {limit}; \
         use the accelerated sampler"
    )]
    TooLargeForReference { volume: f64, limit: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
