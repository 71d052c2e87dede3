use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::params::{pareto, SfpParams};
use super::SfpError;
use crate::graph::UndirectedGraph;
use crate::seeds::{derive_seed, stream, Purpose};

/// Above this expected vertex count the all-pairs sampler refuses to run.
pub const REFERENCE_MAX_EXPECTED_VERTICES: f64 = 2.0e5;

/// Borrowed view of one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex<'a> {
    pub id: u32,
    pub position: &'a [f64],
    pub weight: f64,
}

/// Positions (row-major, `dim` coordinates per vertex) and weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VertexSet {
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl VertexSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            positions: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn from_parts(dim: usize, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self, SfpError> {
        if dim == 0 || positions.len() != dim * weights.len() {
            return Err(SfpError::InvalidVertices(format!(
                "{} coordinates do not match {} weights in dimension {dim}",
                positions.len(),
                weights.len()
            )));
        }
        Ok(Self {
            dim,
            positions,
            weights,
        })
    }

    pub fn push(&mut self, position: &[f64], weight: f64) {
        assert_eq!(position.len(), self.dim, "position has wrong dimension");
        self.positions.extend_from_slice(position);
        self.weights.push(weight);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn position(&self, i: u32) -> &[f64] {
        let i = i as usize * self.dim;
        &self.positions[i..i + self.dim]
    }

    #[inline]
    pub fn weight(&self, i: u32) -> f64 {
        self.weights[i as usize]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn get(&self, i: u32) -> Vertex<'_> {
        Vertex {
            id: i,
            position: self.position(i),
            weight: self.weight(i),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex<'_>> {
        (0..self.len() as u32).map(|i| self.get(i))
    }

    /// Checks weights ≥ 1 and positions inside `[0, side)^d`.
    pub fn validate(&self, params: &SfpParams) -> Result<(), SfpError> {
        if self.dim != params.dim {
            return Err(SfpError::InvalidVertices(format!(
                "vertex dimension {} differs from model dimension {}",
                self.dim, params.dim
            )));
        }
        let side = params.side();
        for v in self.iter() {
            if !(v.weight >= 1.0 && v.weight.is_finite()) {
                return Err(SfpError::InvalidVertices(format!(
                    "vertex {} has weight {} < 1",
                    v.id, v.weight
                )));
            }
            if let Some(x) = v.position.iter().find(|x| !(**x >= 0.0 && **x < side)) {
                return Err(SfpError::InvalidVertices(format!(
                    "vertex {} has coordinate {x} outside [0, {side})",
                    v.id
                )));
            }
        }
        Ok(())
    }
}

/// A sampled graph together with the vertex table and the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SfpGraph {
    params: SfpParams,
    vertices: VertexSet,
    graph: UndirectedGraph,
    seed: Option<u64>,
}

impl SfpGraph {
    pub fn from_parts(
        params: SfpParams,
        vertices: VertexSet,
        graph: UndirectedGraph,
        seed: Option<u64>,
    ) -> Result<Self, SfpError> {
        params.validate()?;
        vertices.validate(&params)?;
        if graph.vertex_count() != vertices.len() {
            return Err(SfpError::InvalidVertices(format!(
                "graph has {} vertices but the table has {}",
                graph.vertex_count(),
                vertices.len()
            )));
        }
        graph.check_invariants()?;
        Ok(Self {
            params,
            vertices,
            graph,
            seed,
        })
    }

    pub fn params(&self) -> &SfpParams {
        &self.params
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.vertices
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
}

/// Poisson(volume) many i.i.d. uniform points in `[0, side)^d`.
pub fn sample_points(params: &SfpParams, seed: u64) -> Vec<f64> {
    let mut rng = stream(derive_seed(seed, Purpose::Points, 0), &[]);
    let count = Poisson::new(params.volume)
        .map(|p| p.sample(&mut rng) as usize)
        .unwrap_or(0);
    let side = params.side();
    (0..count * params.dim)
        .map(|_| {
            let x = rng.random::<f64>() * side;
            // The product can round up to `side` itself.
            if x < side {
                x
            } else {
                side.next_down()
            }
        })
        .collect()
}

/// `count` i.i.d. Pareto weights from the weight stream of `seed`.
pub fn sample_weights(tau: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(derive_seed(seed, Purpose::Weights, 0), &[]);
    (0..count)
        .map(|_| pareto(tau, 1.0 - rng.random::<f64>()))
        .collect()
}

/// Vertex table for `seed`: points and weights come from separate streams.
pub fn sample_vertices(params: &SfpParams, seed: u64) -> VertexSet {
    let positions = sample_points(params, seed);
    let count = positions.len() / params.dim;
    let weights = sample_weights(params.tau, count, seed);
    VertexSet {
        dim: params.dim,
        positions,
        weights,
    }
}

/// All-pairs sampler: one independent uniform per unordered pair `i < j`, in
/// lexicographic order, with an edge iff the uniform is below the connection
/// probability. Using the same `edge_seed` for two values of `rho` yields
/// nested edge sets.
pub fn reference_edges(
    vertices: &VertexSet,
    params: &SfpParams,
    edge_seed: u64,
) -> Result<UndirectedGraph, SfpError> {
    let n = vertices.len() as u32;
    let mut rng = stream(edge_seed, &[]);
    let mut edges = Vec::new();
    for i in 0..n {
        let (xi, wi) = (vertices.position(i), vertices.weight(i));
        for j in i + 1..n {
            let p = params.connection_probability(xi, vertices.position(j), wi, vertices.weight(j))?;
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(UndirectedGraph::from_edges(n as usize, edges)?)
}

/// Exact-law sampler by explicit enumeration of all vertex pairs.
pub fn sample_graph_reference(params: &SfpParams, seed: u64) -> Result<SfpGraph, SfpError> {
    params.validate()?;
    if params.volume > REFERENCE_MAX_EXPECTED_VERTICES {
        return Err(SfpError::TooLargeForReference {
            volume: params.volume,
            limit: REFERENCE_MAX_EXPECTED_VERTICES,
        });
    }
    let vertices = sample_vertices(params, seed);
    let graph = reference_edges(&vertices, params, derive_seed(seed, Purpose::Edges, 0))?;
    SfpGraph::from_parts(*params, vertices, graph, Some(seed))
}

/// Reference samples for several `rho` values sharing points, weights and the
/// per-pair uniforms, so edge sets are nested in `rho`.
pub fn sample_rho_coupled(
    params: &SfpParams,
    rhos: &[f64],
    seed: u64,
) -> Result<Vec<SfpGraph>, SfpError> {
    rhos.iter()
        .map(|&rho| sample_graph_reference(&params.with_rho(rho), seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let p = SfpParams::new(2, 2.5, 2.2, 0.5, 300.0).unwrap();
        let a = sample_graph_reference(&p, 11).unwrap();
        let b = sample_graph_reference(&p, 11).unwrap();
        let c = sample_graph_reference(&p, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn zero_rho_gives_no_edges() {
        let p = SfpParams::new(2, 2.5, 2.2, 0.0, 200.0).unwrap();
        assert_eq!(sample_graph_reference(&p, 1).unwrap().graph().edge_count(), 0);
    }

    #[test]
    fn too_large_volume_is_refused() {
        let p = SfpParams::new(2, 2.5, 2.2, 1.0, 1e6).unwrap();
        assert!(matches!(
            sample_graph_reference(&p, 1),
            Err(SfpError::TooLargeForReference { .. })
        ));
    }

    #[test]
    fn single_vertex_has_no_edges() {
        let p = SfpParams::new(1, 2.0, 2.0, 5.0, 10.0).unwrap();
        let mut vs = VertexSet::new(1);
        vs.push(&[3.0], 2.0);
        let g = reference_edges(&vs, &p, 5).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 0));
    }

    #[test]
    fn rho_coupling_nests_edge_sets() {
        let p = SfpParams::new(2, 2.5, 2.2, 0.1, 400.0).unwrap();
        let gs = sample_rho_coupled(&p, &[0.05, 0.2, 1.0], 3).unwrap();
        for w in gs.windows(2) {
            assert!(w[0].graph().edges().all(|(u, v)| w[1].graph().has_edge(u, v)));
        }
    }

    #[test]
    fn positions_lie_in_box() {
        let p = SfpParams::new(3, 4.0, 2.5, 1.0, 500.0).unwrap();
        let vs = sample_vertices(&p, 9);
        vs.validate(&p).unwrap();
        assert!(!vs.is_empty());
    }
}
