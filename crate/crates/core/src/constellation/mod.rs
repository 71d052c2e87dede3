//! Constellations: trees of high-degree stars joined by short disjoint
//! paths, their verification, and the two constructions that find them in
//! sampled graphs (multi-scale partition for `γ > 2`, layered boxes for
//! `γ ∈ (1, 2)`).

mod check;
mod grid;
mod gt2;
mod layered;
mod partition;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{is_constellation, star_adjacency, ConstellationParams, Violation};
pub use grid::{snake_coords, snake_index};
pub use gt2::{
    build_star_paths, check_e1, check_e2, check_star_degrees, component_per_fine_cell,
    extract_constellation_gamma_gt2, find_stars, validate_star_paths, FineComponents, Gt2Report,
};
pub use layered::{
    build_layered_boxes, extract_constellation_gamma_in_1_2, layer_count, mu1, top_boxes_per_axis,
    LayeredBoxes, LayeredMode, LayeredReport, LayeredSpec,
};
pub use partition::{
    build_partition, nu_p, subdivision_depth, validate_paper_faithful, BoxPartition, CellLocation,
    PartitionMode, PartitionSpec,
};

use crate::graph::{GraphError, UndirectedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{0}")]
    Infeasible(String),
}

/// A tree in the host graph with ordered distinguished vertices `J` and the
/// paths joining consecutive ones. Vertex ids are host ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub params: ConstellationParams,
    #[serde(rename = "J")]
    pub j: Vec<u32>,
    pub paths: Vec<Vec<u32>>,
    pub tree_edges: Vec<(u32, u32)>,
}

impl Constellation {
    /// Sorted vertex set of the tree.
    pub fn vertices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .tree_edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.j.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// The tree relabelled to `0..k`, with the host id of each local vertex
    /// and `J` in local ids. A repeated or looping edge is reported as a cycle.
    pub fn local_tree(&self) -> Result<(UndirectedGraph, Vec<u32>, Vec<u32>), Violation> {
        let vertices = self.vertices();
        let local = |v: u32| vertices.binary_search(&v).unwrap() as u32;
        let edges = self.tree_edges.iter().map(|&(a, b)| (local(a), local(b)));
        let tree = UndirectedGraph::from_edges(vertices.len(), edges).map_err(|e| match e {
            GraphError::SelfLoop(u) => Violation::Cycle { u: vertices[u as usize], v: vertices[u as usize] },
            GraphError::DuplicateEdge(u, v) => Violation::Cycle {
                u: vertices[u as usize],
                v: vertices[v as usize],
            },
            _ => unreachable!("local ids are in range"),
        })?;
        let j = self.j.iter().map(|&x| local(x)).collect();
        Ok((tree, vertices, j))
    }

    pub fn verify(&self) -> Result<(), Violation> {
        let (tree, _, j) = self.local_tree()?;
        is_constellation(&tree, &j, &self.params)
    }

    /// Every tree edge is an edge of `host`.
    pub fn is_subgraph_of(&self, host: &UndirectedGraph) -> bool {
        self.tree_edges.iter().all(|&(a, b)| host.has_edge(a, b))
    }
}

/// BFS spanning tree of the union of `edges`, rooted at `root`. Edges are
/// explored in the order given; unreachable vertices are dropped.
pub(crate) fn spanning_tree(root: u32, edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut ids: Vec<u32> = edges.iter().flat_map(|&(a, b)| [a, b]).chain([root]).collect();
    ids.sort_unstable();
    ids.dedup();
    let local = |v: u32| ids.binary_search(&v).unwrap();
    let mut adj = vec![Vec::new(); ids.len()];
    for &(a, b) in edges {
        adj[local(a)].push(b);
        adj[local(b)].push(a);
    }
    let mut seen = vec![false; ids.len()];
    seen[local(root)] = true;
    let mut queue = VecDeque::from([root]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &w in &adj[local(u)] {
            if !seen[local(w)] {
                seen[local(w)] = true;
                out.push((u.min(w), u.max(w)));
                queue.push_back(w);
            }
        }
    }
    out
}

/// Stage at which a construction failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "stars")]
    Stars,
    E1,
    E2,
    #[serde(rename = "E_star")]
    EStar,
    #[serde(rename = "E_path")]
    EPath,
    #[serde(rename = "good_box")]
    GoodBox,
    #[serde(rename = "verify")]
    Verify,
}

/// Diagnostic output of a construction that did not produce a constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedFailure {
    pub stage: Stage,
    pub witness: Vec<u64>,
    pub detail: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanning_tree_of_cycle_drops_one_edge() {
        let t = spanning_tree(10, &[(10, 11), (11, 12), (12, 10), (12, 13)]);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn constellation_round_trip_and_verify() {
        let c = Constellation {
            params: ConstellationParams::new(2.0, 2, 2).unwrap(),
            j: vec![100, 300],
            paths: vec![vec![100, 200, 300]],
            tree_edges: vec![(100, 200), (200, 300)],
        };
        assert_eq!(c.verify(), Ok(()));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"J\":[100,300]") && json.contains("\"Delta\":2"));
        let back: Constellation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
