//! Verification of (S, D, Δ)-constellations.
//!
//! A graph `G` with distinguished vertices `J` is a constellation when
//!
//! * P1: `G` is a connected tree;
//! * P2: every `x` in `J` has degree at least `S/2`;
//! * P3: `dist(x, y) <= D` whenever `x *~ y`, i.e. the path between them in
//!   the tree meets no other vertex of `J`;
//! * P4: the graph on `J` with edges `{x, y : x *~ y}` is a tree of maximum
//!   degree at most `Δ`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ConstellationError;
use crate::graph::UndirectedGraph;
use crate::union_find::DisjointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationParams {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "D")]
    pub d: u32,
    #[serde(rename = "Delta")]
    pub delta: u32,
}

impl ConstellationParams {
    pub fn new(s: f64, d: u32, delta: u32) -> Result<Self, ConstellationError> {
        let p = Self { s, d, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConstellationError> {
        if !(self.s >= 2.0 && self.s.is_finite()) {
            return Err(ConstellationError::InvalidParams(format!("S must be >= 2, got {}", self.s)));
        }
        if self.d < 1 {
            return Err(ConstellationError::InvalidParams("D must be >= 1".into()));
        }
        if self.delta < 2 {
            return Err(ConstellationError::InvalidParams("Delta must be >= 2".into()));
        }
        Ok(())
    }
}

/// First property that fails, with a witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Violation {
    /// `J` is empty, repeats a vertex or names a vertex outside the graph.
    InvalidDistinguished { vertex: Option<u32> },
    /// Not connected: `vertex` is unreachable from vertex 0.
    Disconnected { vertex: u32 },
    /// Connected but with a cycle through edge `(u, v)`.
    Cycle { u: u32, v: u32 },
    LowDegree { vertex: u32, degree: usize, required: f64 },
    TooFar { x: u32, y: u32, distance: u32, bound: u32 },
    /// The reduced graph is disconnected; `vertex` of `J` is unreachable from `J[0]`.
    ReducedDisconnected { vertex: u32 },
    ReducedCycle { x: u32, y: u32 },
    ReducedDegree { vertex: u32, degree: usize, bound: u32 },
}

impl Violation {
    /// "P1" to "P4", or "J" for a malformed distinguished set.
    pub fn property(&self) -> &'static str {
        match self {
            Violation::InvalidDistinguished { .. } => "J",
            Violation::Disconnected { .. } | Violation::Cycle { .. } => "P1",
            Violation::LowDegree { .. } => "P2",
            Violation::TooFar { .. } => "P3",
            Violation::ReducedDisconnected { .. }
            | Violation::ReducedCycle { .. }
            | Violation::ReducedDegree { .. } => "P4",
        }
    }
}

/// Pairs `x < y` of `J` with `x *~ y` in the tree, and their distance.
///
/// Runs a breadth-first search from every `x` in `J` that does not expand
/// past other members of `J`. Only meaningful when `tree` is a tree.
pub fn star_adjacency(tree: &UndirectedGraph, j: &[u32]) -> Vec<(u32, u32, u32)> {
    let n = tree.vertex_count();
    let mut in_j = vec![false; n];
    for &x in j {
        in_j[x as usize] = true;
    }
    let mut dist = vec![u32::MAX; n];
    let mut touched = Vec::new();
    let mut out = Vec::new();
    for &x in j {
        let mut queue = VecDeque::from([x]);
        dist[x as usize] = 0;
        touched.push(x);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &w in tree.neighbors(u) {
                if dist[w as usize] != u32::MAX {
                    continue;
                }
                dist[w as usize] = du + 1;
                touched.push(w);
                if in_j[w as usize] {
                    if x < w {
                        out.push((x, w, du + 1));
                    }
                } else {
                    queue.push_back(w);
                }
            }
        }
        for v in touched.drain(..) {
            dist[v as usize] = u32::MAX;
        }
    }
    out.sort_unstable();
    out
}

/// Checks P1 to P4 in order and reports the first failure.
pub fn is_constellation(
    tree: &UndirectedGraph,
    j: &[u32],
    params: &ConstellationParams,
) -> Result<(), Violation> {
    let n = tree.vertex_count();
    if j.is_empty() {
        return Err(Violation::InvalidDistinguished { vertex: None });
    }
    let mut seen = vec![false; n];
    for &x in j {
        if x as usize >= n || seen[x as usize] {
            return Err(Violation::InvalidDistinguished { vertex: Some(x) });
        }
        seen[x as usize] = true;
    }

    let reach = tree.bfs_distances(0);
    if let Some(v) = reach.iter().position(Option::is_none) {
        return Err(Violation::Disconnected { vertex: v as u32 });
    }
    if tree.edge_count() + 1 != n {
        let mut ds = DisjointSet::new(n);
        let (u, v) = tree.edges().find(|&(u, v)| !ds.union(u, v)).expect("connected graph with n or more edges has a cycle");
        return Err(Violation::Cycle { u, v });
    }

    for &x in j {
        let degree = tree.degree(x);
        if (degree as f64) < params.s / 2.0 {
            return Err(Violation::LowDegree {
                vertex: x,
                degree,
                required: params.s / 2.0,
            });
        }
    }

    let pairs = star_adjacency(tree, j);
    if let Some(&(x, y, distance)) = pairs.iter().find(|p| p.2 > params.d) {
        return Err(Violation::TooFar {
            x,
            y,
            distance,
            bound: params.d,
        });
    }

    let index = |v: u32| j.iter().position(|&x| x == v).unwrap() as u32;
    let mut ds = DisjointSet::new(j.len());
    let mut degree = vec![0usize; j.len()];
    for &(x, y, _) in &pairs {
        let (a, b) = (index(x), index(y));
        if !ds.union(a, b) {
            return Err(Violation::ReducedCycle { x, y });
        }
        degree[a as usize] += 1;
        degree[b as usize] += 1;
    }
    if let Some(&x) = j.iter().find(|&&x| ds.find(index(x)) != ds.find(0)) {
        return Err(Violation::ReducedDisconnected { vertex: x });
    }
    if let Some(i) = (0..j.len()).find(|&i| degree[i] > params.delta as usize) {
        return Err(Violation::ReducedDegree {
            vertex: j[i],
            degree: degree[i],
            bound: params.delta,
        });
    }
    Ok(())
}
