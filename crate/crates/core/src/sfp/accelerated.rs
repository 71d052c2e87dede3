//! Sub-quadratic exact sampler.
//!
//! Vertices are split into weight layers `2^l <= w < 2^(l+1)` and indexed by a
//! dyadic grid (Morton order, finest cell side at least `min_cell_side`). For
//! each pair of layers with weight bounds `b1, b2`, the grid is descended from
//! the root down to the level `g*` whose cell side still exceeds
//! `(rho b1 b2)^(1/alpha)`. At each level, cell pairs that are not adjacent but
//! whose parents are adjacent are handled as a block: every vertex pair in the
//! block has connection probability at most
//! `q = min(1, rho b1 b2 / dmin^alpha)`, so candidate pairs are drawn by
//! geometric skipping at rate `q` and kept with probability `p/q`. Cell pairs
//! still adjacent at `g*` are evaluated pair by pair. Every vertex pair falls
//! in exactly one block, so the law matches the all-pairs sampler exactly,
//! apart from blocks whose dominating mass `|A| |B| q` is below
//! `negligible_mass`, which are dropped.
//!
//! Each block draws from its own stream keyed by (level, layers, cells), so
//! the result does not depend on how layer pairs are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{Boundary, SfpParams};
use super::sample::{sample_vertices, SfpGraph, VertexSet};
use super::SfpError;
use crate::graph::UndirectedGraph;
use crate::seeds::{derive_seed, stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcceleratedOptions {
    /// Lower bound on the side of the finest grid cells.
    pub min_cell_side: f64,
    /// Blocks whose expected number of proposals is below this are skipped.
    /// Zero makes the sampler exact.
    pub negligible_mass: f64,
}

impl Default for AcceleratedOptions {
    fn default() -> Self {
        Self {
            min_cell_side: 1.0,
            negligible_mass: 1e-12,
        }
    }
}

/// Relative slack on cell-gap distances; covers rounding in cell assignment.
const GAP_SLACK: f64 = 1.0 - 1e-6;

pub fn sample_graph_accelerated(
    params: &SfpParams,
    seed: u64,
    opts: &AcceleratedOptions,
) -> Result<SfpGraph, SfpError> {
    params.validate()?;
    let vertices = sample_vertices(params, seed);
    let graph = accelerated_edges(&vertices, params, derive_seed(seed, Purpose::Edges, 0), opts)?;
    SfpGraph::from_parts(*params, vertices, graph, Some(seed))
}

/// Edge set for a fixed vertex table, drawn with the layered grid sampler.
pub fn accelerated_edges(
    vertices: &VertexSet,
    params: &SfpParams,
    edge_seed: u64,
    opts: &AcceleratedOptions,
) -> Result<UndirectedGraph, SfpError> {
    params.validate()?;
    vertices.validate(params)?;
    if !(opts.min_cell_side > 0.0 && opts.negligible_mass >= 0.0) {
        return Err(SfpError::InvalidParams(
            "min_cell_side must be positive and negligible_mass non-negative".into(),
        ));
    }
    let n = vertices.len();
    if params.rho == 0.0 || n < 2 {
        return Ok(UndirectedGraph::empty(n));
    }
    let index = LayeredIndex::build(vertices, params, opts.min_cell_side);
    let tasks = index.layer_pairs();
    let chunks: Vec<Vec<(u32, u32)>> = tasks
        .par_iter()
        .map(|&(a, b)| {
            let mut out = Vec::new();
            let sampler = BlockSampler {
                index: &index,
                vertices,
                params,
                edge_seed,
                negligible_mass: opts.negligible_mass,
            };
            index.for_each_block(a, b, |blk| sampler.sample(&blk, &mut out));
            out
        })
        .collect();
    let edges = chunks.into_iter().flatten();
    Ok(UndirectedGraph::from_edges(n, edges)?)
}

struct Layer {
    exponent: i32,
    bound: f64,
    /// Vertex ids sorted by finest-level Morton code.
    verts: Vec<u32>,
    codes: Vec<u64>,
    /// Start offsets of every finest cell, when the layer is dense enough.
    prefix: Option<Vec<u32>>,
}

struct LayeredIndex {
    dim: usize,
    finest: u32,
    side: f64,
    torus: bool,
    rho: f64,
    alpha: f64,
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    /// Non-adjacent cells with adjacent parents.
    Separated,
    /// Adjacent cells at the stopping level.
    Direct,
    /// A single cell paired with itself at the stopping level.
    SameCell,
}

struct Block<'a> {
    kind: BlockKind,
    level: u32,
    layers: (usize, usize),
    cells: (u64, u64),
    first: &'a [u32],
    second: &'a [u32],
    dmin: f64,
}

fn weight_exponent(w: f64) -> i32 {
    // floor(log2 w) read off the exponent bits; exact for normal w >= 1.
    ((w.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

impl LayeredIndex {
    fn build(vertices: &VertexSet, params: &SfpParams, min_cell_side: f64) -> Self {
        let dim = params.dim;
        let side = params.side();
        let cap = (63 / dim) as u32;
        let mut finest = 0u32;
        while finest < cap && side / 2f64.powi(finest as i32 + 1) >= min_cell_side {
            finest += 1;
        }
        let cells_per_axis = 1u64 << finest;
        let cell = side / cells_per_axis as f64;

        let mut tagged: Vec<(i32, u64, u32)> = (0..vertices.len() as u32)
            .map(|v| {
                let coords: Vec<u64> = vertices
                    .position(v)
                    .iter()
                    .map(|x| ((x / cell) as u64).min(cells_per_axis - 1))
                    .collect();
                let code = morton_encode(&coords, finest);
                (weight_exponent(vertices.weight(v)), code, v)
            })
            .collect();
        tagged.sort_unstable();

        let total_cells = 1u64 << (dim as u32 * finest);
        let mut layers: Vec<Layer> = Vec::new();
        for chunk in tagged.chunk_by(|a, b| a.0 == b.0) {
            let exponent = chunk[0].0;
            let codes: Vec<u64> = chunk.iter().map(|t| t.1).collect();
            let verts: Vec<u32> = chunk.iter().map(|t| t.2).collect();
            let prefix = (total_cells <= 4 * codes.len() as u64 + 4096).then(|| {
                let mut p = vec![0u32; total_cells as usize + 1];
                for &c in &codes {
                    p[c as usize + 1] += 1;
                }
                for i in 1..p.len() {
                    p[i] += p[i - 1];
                }
                p
            });
            layers.push(Layer {
                exponent,
                bound: 2f64.powi(exponent + 1),
                verts,
                codes,
                prefix,
            });
        }
        Self {
            dim,
            finest,
            side,
            torus: params.boundary == Boundary::Torus,
            rho: params.rho,
            alpha: params.alpha,
            layers,
        }
    }

    fn layer_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.layers.len();
        (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect()
    }

    fn cell_side(&self, level: u32) -> f64 {
        self.side / (1u64 << level) as f64
    }

    /// Deepest level whose cells are at least `(rho b1 b2)^(1/alpha)` wide.
    fn stop_level(&self, a: usize, b: usize) -> u32 {
        let reach = (self.rho * self.layers[a].bound * self.layers[b].bound).powf(1.0 / self.alpha);
        let mut g = 0;
        while g < self.finest && self.cell_side(g + 1) >= reach {
            g += 1;
        }
        g
    }

    fn range(&self, layer: usize, level: u32, cell: u64) -> (usize, usize) {
        let l = &self.layers[layer];
        let shift = self.dim as u32 * (self.finest - level);
        let lo = cell << shift;
        let hi = (cell + 1) << shift;
        match &l.prefix {
            Some(p) => (p[lo as usize] as usize, p[hi as usize] as usize),
            None => (
                l.codes.partition_point(|&c| c < lo),
                l.codes.partition_point(|&c| c < hi),
            ),
        }
    }

    fn occupied_cells(&self, layer: usize, level: u32) -> Vec<(u64, usize, usize)> {
        let shift = self.dim as u32 * (self.finest - level);
        let codes = &self.layers[layer].codes;
        let mut out = Vec::new();
        let mut start = 0;
        while start < codes.len() {
            let cell = codes[start] >> shift;
            let end = start + codes[start..].partition_point(|&c| c >> shift == cell);
            out.push((cell, start, end));
            start = end;
        }
        out
    }

    /// Per-axis index distance, wrapped on the torus.
    fn axis_gap(&self, level: u32, a: u64, b: u64) -> u64 {
        let d = a.abs_diff(b);
        if self.torus {
            d.min((1u64 << level) - d)
        } else {
            d
        }
    }

    /// Cells within Chebyshev index distance one of `coords`, including itself.
    fn neighbourhood(&self, level: u32, coords: &[u64]) -> Vec<u64> {
        let n = 1i64 << level;
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32));
        let mut cur = vec![0u64; self.dim];
        let total = 3usize.pow(self.dim as u32);
        'outer: for mut t in 0..total {
            for a in 0..self.dim {
                let off = (t % 3) as i64 - 1;
                t /= 3;
                let mut c = coords[a] as i64 + off;
                if c < 0 || c >= n {
                    if !self.torus {
                        continue 'outer;
                    }
                    c = c.rem_euclid(n);
                }
                cur[a] = c as u64;
            }
            out.push(morton_encode(&cur, level));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Cells whose parent neighbours the parent of `coords`, minus the
    /// neighbours of `coords` itself.
    fn separated_candidates(&self, level: u32, coords: &[u64]) -> Vec<u64> {
        let parent: Vec<u64> = coords.iter().map(|c| c >> 1).collect();
        let mut out = Vec::new();
        let mut child = vec![0u64; self.dim];
        for p in self.neighbourhood(level - 1, &parent) {
            let pc = morton_decode(p, self.dim, level - 1);
            for e in 0..1u64 << self.dim {
                for a in 0..self.dim {
                    child[a] = 2 * pc[a] + ((e >> a) & 1);
                }
                if (0..self.dim).any(|a| self.axis_gap(level, child[a], coords[a]) >= 2) {
                    out.push(morton_encode(&child, level));
                }
            }
        }
        out
    }

    fn min_distance(&self, level: u32, a: &[u64], b: &[u64]) -> f64 {
        let cs = self.cell_side(level);
        let s: f64 = (0..self.dim)
            .map(|i| {
                let g = self.axis_gap(level, a[i], b[i]).saturating_sub(1) as f64 * cs;
                g * g
            })
            .sum();
        s.sqrt() * GAP_SLACK
    }

    /// Calls `f` once for every block of the layer pair `(a, b)`, `a <= b`.
    /// Together the blocks cover each unordered vertex pair exactly once.
    fn for_each_block<F: FnMut(Block<'_>)>(&self, a: usize, b: usize, mut f: F) {
        let same = a == b;
        let stop = self.stop_level(a, b);
        // Walk the sparser layer and look up the other one.
        let flip = !same && self.layers[b].verts.len() < self.layers[a].verts.len();
        let (walk, look) = if flip { (b, a) } else { (a, b) };
        let slice = |layer: usize, r: (usize, usize)| &self.layers[layer].verts[r.0..r.1];

        for level in 0..=stop {
            for (cell, s, e) in self.occupied_cells(walk, level) {
                let coords = morton_decode(cell, self.dim, level);
                let mut emit = |other: u64, kind: BlockKind, dmin: f64| {
                    let r = self.range(look, level, other);
                    if r.0 == r.1 {
                        return;
                    }
                    let (mine, theirs) = (slice(walk, (s, e)), slice(look, r));
                    let (cells, first, second) = if flip {
                        ((other, cell), theirs, mine)
                    } else {
                        ((cell, other), mine, theirs)
                    };
                    f(Block {
                        kind,
                        level,
                        layers: (a, b),
                        cells,
                        first,
                        second,
                        dmin,
                    });
                };
                if level >= 1 {
                    for other in self.separated_candidates(level, &coords) {
                        if same && other <= cell {
                            continue;
                        }
                        let oc = morton_decode(other, self.dim, level);
                        emit(other, BlockKind::Separated, self.min_distance(level, &coords, &oc));
                    }
                }
                if level == stop {
                    for other in self.neighbourhood(level, &coords) {
                        if same && other < cell {
                            continue;
                        }
                        let kind = if same && other == cell {
                            BlockKind::SameCell
                        } else {
                            BlockKind::Direct
                        };
                        emit(other, kind, 0.0);
                    }
                }
            }
        }
    }
}

struct BlockSampler<'a> {
    index: &'a LayeredIndex,
    vertices: &'a VertexSet,
    params: &'a SfpParams,
    edge_seed: u64,
    negligible_mass: f64,
}

impl BlockSampler<'_> {
    #[inline]
    fn probability(&self, u: u32, v: u32) -> f64 {
        let r = self.params.distance(self.vertices.position(u), self.vertices.position(v));
        if r == 0.0 {
            // Coincident sampled points have probability zero; treat as the limit.
            return 1.0;
        }
        self.params
            .probability_at_distance(r, self.vertices.weight(u), self.vertices.weight(v))
    }

    fn sample(&self, blk: &Block<'_>, out: &mut Vec<(u32, u32)>) {
        let la = &self.index.layers[blk.layers.0];
        let lb = &self.index.layers[blk.layers.1];
        let key = [
            blk.level as u64,
            la.exponent as u64,
            lb.exponent as u64,
            blk.cells.0,
            blk.cells.1,
            blk.kind as u64,
        ];
        let mut rng = stream(self.edge_seed, &key);
        let mut push = |u: u32, v: u32| out.push(if u < v { (u, v) } else { (v, u) });
        match blk.kind {
            BlockKind::SameCell => {
                for (i, &u) in blk.first.iter().enumerate() {
                    for &v in &blk.first[i + 1..] {
                        if rng.random::<f64>() < self.probability(u, v) {
                            push(u, v);
                        }
                    }
                }
            }
            BlockKind::Direct => {
                for &u in blk.first {
                    for &v in blk.second {
                        if rng.random::<f64>() < self.probability(u, v) {
                            push(u, v);
                        }
                    }
                }
            }
            BlockKind::Separated => {
                let q = (self.index.rho * la.bound * lb.bound / blk.dmin.powf(self.index.alpha)).min(1.0);
                let n2 = blk.second.len() as u64;
                let total = blk.first.len() as u64 * n2;
                if (total as f64) * q < self.negligible_mass {
                    return;
                }
                if q >= 1.0 {
                    for &u in blk.first {
                        for &v in blk.second {
                            if rng.random::<f64>() < self.probability(u, v) {
                                push(u, v);
                            }
                        }
                    }
                    return;
                }
                let log_miss = (-q).ln_1p();
                let mut k: u64 = 0;
                loop {
                    let skip = ((1.0 - rng.random::<f64>()).ln() / log_miss).floor();
                    if skip >= (total - k) as f64 {
                        break;
                    }
                    k += skip as u64;
                    let (u, v) = (blk.first[(k / n2) as usize], blk.second[(k % n2) as usize]);
                    if rng.random::<f64>() * q < self.probability(u, v) {
                        push(u, v);
                    }
                    k += 1;
                    if k >= total {
                        break;
                    }
                }
            }
        }
    }
}

fn morton_encode(coords: &[u64], bits: u32) -> u64 {
    let d = coords.len() as u32;
    let mut code = 0u64;
    for b in 0..bits {
        for (a, &c) in coords.iter().enumerate() {
            code |= ((c >> b) & 1) << (b * d + a as u32);
        }
    }
    code
}

fn morton_decode(code: u64, dim: usize, bits: u32) -> Vec<u64> {
    let d = dim as u32;
    let mut coords = vec![0u64; dim];
    for b in 0..bits {
        for (a, c) in coords.iter_mut().enumerate() {
            *c |= ((code >> (b * d + a as u32)) & 1) << b;
        }
    }
    coords
}
