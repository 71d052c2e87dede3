//! Component sizes and graph distances.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::UndirectedGraph;
use crate::seeds::{derive_seed, stream, Purpose};
use crate::sfp::SfpGraph;

/// `|largest component| / |V|`, or 0 for the empty graph.
pub fn largest_component_fraction(graph: &UndirectedGraph) -> f64 {
    match graph.vertex_count() {
        0 => 0.0,
        n => graph.largest_component().len() as f64 / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScope {
    /// Both endpoints drawn from the largest component.
    #[default]
    LargestComponent,
    /// Both endpoints drawn from all vertices; pairs may be unreachable.
    AllVertices,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample {
    pub source: u32,
    pub target: u32,
    pub euclidean: f64,
    /// `None` when the endpoints lie in different components.
    pub graph_distance: Option<u32>,
}

/// Graph and Euclidean distances of `n_pairs` uniformly drawn pairs of
/// distinct vertices. Pairs are drawn sequentially from the seed and
/// measured in parallel.
pub fn chemical_distance_sample(g: &SfpGraph, n_pairs: usize, seed: u64, scope: PairScope) -> Vec<DistanceSample> {
    let pool: Vec<u32> = match scope {
        PairScope::LargestComponent => g.graph().largest_component(),
        PairScope::AllVertices => (0..g.vertex_count() as u32).collect(),
    };
    if pool.len() < 2 {
        return Vec::new();
    }
    let mut rng = stream(derive_seed(seed, Purpose::PairSample, 0), &[]);
    let pairs: Vec<(u32, u32)> = (0..n_pairs)
        .map(|_| {
            let i = rng.random_range(0..pool.len());
            let mut j = rng.random_range(0..pool.len() - 1);
            if j >= i {
                j += 1;
            }
            (pool[i], pool[j])
        })
        .collect();
    let vs = g.vertices();
    pairs
        .into_par_iter()
        .map(|(source, target)| DistanceSample {
            source,
            target,
            euclidean: g.params().distance(vs.position(source), vs.position(target)),
            graph_distance: g.graph().distance(source, target),
        })
        .collect()
}
