//! Scale-free percolation graphs, the contact process on them, and the
//! constellation constructions used to certify long survival.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constellation;
pub mod contact;
pub mod graph;
pub mod seeds;
pub mod sfp;
pub mod union_find;

pub use graph::{GraphError, UndirectedGraph};
pub use sfp::{Boundary, SfpError, SfpGraph, SfpParams, VertexSet};
pub use constellation::{
    is_constellation, Constellation, ConstellationError, ConstellationParams, LayeredSpec, PartitionSpec,
    StagedFailure, Violation,
};
pub use contact::{ContactError, GraphicalConstruction, ReplicaRecord};
