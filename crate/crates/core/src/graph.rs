//! Simple undirected graphs with sorted adjacency lists.

use std::collections::VecDeque;

use thiserror::Error;

use crate::union_find::DisjointSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(u32, u32),
    #[error("edge {0}-{1} references a vertex outside 0..{2}")]
    VertexOutOfRange(u32, u32, usize),
    #[error("adjacency is not symmetric: {0} lists {1} but not conversely")]
    Asymmetric(u32, u32),
    #[error("adjacency list of {0} is not strictly sorted")]
    Unsorted(u32),
}

/// Undirected simple graph on vertices `0..n`.
///
/// Invariants: adjacency lists are strictly increasing, symmetric and free of
/// self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

impl UndirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list, rejecting loops and duplicates.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        let mut edge_count = 0;
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u as u32, w[0]);
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
            edge_count += list.len();
        }
        Ok(Self {
            adjacency,
            edge_count: edge_count / 2,
        })
    }

    /// Wraps precomputed adjacency lists after checking every invariant.
    pub fn from_adjacency(adjacency: Vec<Vec<u32>>) -> Result<Self, GraphError> {
        let n = adjacency.len();
        let mut half = 0usize;
        for (u, list) in adjacency.iter().enumerate() {
            let u = u as u32;
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Unsorted(u));
            }
            for &v in list {
                if v as usize >= n {
                    return Err(GraphError::VertexOutOfRange(u, v, n));
                }
                if v == u {
                    return Err(GraphError::SelfLoop(u));
                }
                if adjacency[v as usize].binary_search(&u).is_err() {
                    return Err(GraphError::Asymmetric(u, v));
                }
            }
            half += list.len();
        }
        Ok(Self {
            adjacency,
            edge_count: half / 2,
        })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adjacency
            .get(u as usize)
            .is_some_and(|l| l.binary_search(&v).is_ok())
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, l)| {
            let u = u as u32;
            l.iter().filter(move |&&v| v > u).map(move |&v| (u, v))
        })
    }

    /// Re-checks symmetry, sortedness and absence of loops.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        Self::from_adjacency(self.adjacency.clone()).map(|_| ())
    }

    /// Connected-component label of every vertex; labels are dense and
    /// numbered in order of each component's smallest vertex.
    pub fn component_labels(&self) -> Vec<u32> {
        let n = self.vertex_count();
        let mut ds = DisjointSet::new(n);
        for (u, v) in self.edges() {
            ds.union(u, v);
        }
        let mut label_of_root = vec![u32::MAX; n];
        let mut next = 0u32;
        (0..n as u32)
            .map(|v| {
                let r = ds.find(v) as usize;
                if label_of_root[r] == u32::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }

    /// Vertices of a largest connected component (ties: the component whose
    /// smallest vertex id is smallest), sorted.
    pub fn largest_component(&self) -> Vec<u32> {
        let labels = self.component_labels();
        let ncomp = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut sizes = vec![0usize; ncomp];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        // Labels are numbered by smallest member, so the first maximum wins ties.
        let Some(best) = (0..ncomp).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        else {
            return Vec::new();
        };
        (0..self.vertex_count() as u32)
            .filter(|&v| labels[v as usize] == best as u32)
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || self.largest_component().len() == self.vertex_count()
    }

    /// Hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source as usize] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap_or(0);
            for &w in self.neighbors(u) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Hop distance between two vertices, stopping as soon as `target` is reached.
    pub fn distance(&self, source: u32, target: u32) -> Option<u32> {
        self.shortest_path_within(source, target, |_| true)
            .map(|p| p.len() as u32 - 1)
    }

    /// Shortest path from `source` to `target` whose interior vertices all
    /// satisfy `allowed`. Neighbors are explored in increasing id order, so the
    /// returned path is deterministic.
    pub fn shortest_path_within<F>(&self, source: u32, target: u32, allowed: F) -> Option<Vec<u32>>
    where
        F: Fn(u32) -> bool,
    {
        if source == target {
            return Some(vec![source]);
        }
        let n = self.vertex_count();
        let mut parent = vec![u32::MAX; n];
        parent[source as usize] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if parent[w as usize] != u32::MAX {
                    continue;
                }
                if w == target {
                    parent[w as usize] = u;
                    let mut path = vec![target];
                    let mut cur = u;
                    while cur != source {
                        path.push(cur);
                        cur = parent[cur as usize];
                    }
                    path.push(source);
                    path.reverse();
                    return Some(path);
                }
                if allowed(w) {
                    parent[w as usize] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Subgraph induced by `vertices` (sorted, distinct), relabelled to
    /// `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[u32]) -> UndirectedGraph {
        let mut adjacency = Vec::with_capacity(vertices.len());
        let mut edge_count = 0;
        for &v in vertices {
            let list: Vec<u32> = self
                .neighbors(v)
                .iter()
                .filter_map(|w| vertices.binary_search(w).ok().map(|i| i as u32))
                .collect();
            edge_count += list.len();
            adjacency.push(list);
        }
        UndirectedGraph {
            adjacency,
            edge_count: edge_count / 2,
        }
    }
}

/// One representative of every isomorphism class of connected simple graphs
/// on exactly `n` vertices (`1 <= n <= 6`), in a fixed order.
pub fn connected_graphs(n: usize) -> Vec<UndirectedGraph> {
    assert!((1..=6).contains(&n), "catalogue supports 1..=6 vertices");
    let pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|u| (u + 1..n as u32).map(move |v| (u, v)))
        .collect();
    let perms = permutations(n);
    let canonical = |mask: u32| -> u32 {
        perms
            .iter()
            .map(|p| {
                pairs.iter().enumerate().fold(0u32, |acc, (i, &(u, v))| {
                    if mask >> i & 1 == 0 {
                        return acc;
                    }
                    let (a, b) = (p[u as usize].min(p[v as usize]), p[u as usize].max(p[v as usize]));
                    let j = pairs.iter().position(|&e| e == (a, b)).unwrap();
                    acc | 1 << j
                })
            })
            .min()
            .unwrap()
    };
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0..1u32 << pairs.len() {
        let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
        let g = UndirectedGraph::from_edges(n, edges).unwrap();
        if g.is_connected() {
            seen.insert(canonical(mask));
        }
    }
    seen.into_iter()
        .map(|mask| {
            let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
            UndirectedGraph::from_edges(n, edges).unwrap()
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, (n - 1) as u32);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_sizes() {
        let counts: Vec<usize> = (1..=5).map(|n| connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 6, 21]);
        assert!(connected_graphs(4).iter().all(UndirectedGraph::is_connected));
    }

    fn path(n: u32) -> UndirectedGraph {
        UndirectedGraph::from_edges(n as usize, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    #[test]
    fn rejects_loops_and_duplicates() {
        assert_eq!(
            UndirectedGraph::from_edges(3, [(0, 0)]),
            Err(GraphError::SelfLoop(0))
        );
        assert_eq!(
            UndirectedGraph::from_edges(3, [(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert!(matches!(
            UndirectedGraph::from_edges(2, [(0, 2)]),
            Err(GraphError::VertexOutOfRange(..))
        ));
    }

    #[test]
    fn asymmetric_adjacency_is_rejected() {
        let err = UndirectedGraph::from_adjacency(vec![vec![1], vec![]]).unwrap_err();
        assert_eq!(err, GraphError::Asymmetric(0, 1));
    }

    #[test]
    fn components_and_distances() {
        let g = UndirectedGraph::from_edges(6, [(0, 1), (1, 2), (4, 5)]).unwrap();
        assert_eq!(g.component_labels(), vec![0, 0, 0, 1, 2, 2]);
        assert_eq!(g.largest_component(), vec![0, 1, 2]);
        assert_eq!(g.distance(0, 2), Some(2));
        assert_eq!(g.distance(0, 5), None);
        assert_eq!(g.bfs_distances(4), vec![None, None, None, None, Some(0), Some(1)]);
    }

    #[test]
    fn largest_component_ties_use_smallest_id() {
        let g = UndirectedGraph::from_edges(4, [(2, 3), (0, 1)]).unwrap();
        assert_eq!(g.largest_component(), vec![0, 1]);
    }

    #[test]
    fn restricted_shortest_path() {
        // 0-1-2-3 plus detour 0-4-5-3
        let g = UndirectedGraph::from_edges(6, [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 3)])
            .unwrap();
        assert_eq!(g.shortest_path_within(0, 3, |_| true), Some(vec![0, 1, 2, 3]));
        assert_eq!(g.shortest_path_within(0, 3, |v| v != 1), Some(vec![0, 4, 5, 3]));
        assert_eq!(g.shortest_path_within(0, 3, |v| v == 1 || v == 4), None);
        assert_eq!(path(1).shortest_path_within(0, 0, |_| false), Some(vec![0]));
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = path(5);
        let h = g.induced(&[1, 2, 4]);
        assert_eq!(h.vertex_count(), 3);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }
}
