//! Layered good boxes for `γ ∈ (1, 2)`.
//!
//! Layer `k` (`0 <= k < K`) tiles the window `[0, M 2^K)^d` with cubes of
//! side `2^(k+1)` and keeps the vertices whose weight lies in
//! `(e^(kb), e^((k+1)b)]`, `b = Lα/γ`. The cube `(k+1, v)` is the parent of
//! the `2^d` cubes `(k, 2v + e)`. The star of a box is its heaviest vertex.
//!
//! A top-layer box is good when its predecessor in snake order is good (or it
//! is the first box), it holds at least `S + 1` vertices, its star has at
//! least `S` neighbours in the box, and its star is adjacent to the previous
//! star. Lower boxes replace the predecessor by the parent box.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::grid::{linear_coords, linear_index, locate, snake_coords};
use super::{Constellation, ConstellationError, ConstellationParams, Stage, StagedFailure};
use crate::sfp::{SfpGraph, SfpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayeredMode {
    /// `K = floor(a log n / d)` and `M = floor(n^((1 - a log 2)/d))`.
    #[default]
    PaperFaithful,
    /// `K` and `M` given directly; the boxes cover `[0, M 2^K)^d` only.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayeredSpec {
    pub a: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(default)]
    pub mode: LayeredMode,
    #[serde(default)]
    pub layers: Option<u32>,
    #[serde(default)]
    pub top_boxes_per_axis: Option<u64>,
}

/// `k_n = floor(a log n / d)`.
pub fn layer_count(n: f64, d: usize, a: f64) -> u32 {
    (a * n.ln() / d as f64).floor().max(0.0) as u32
}

/// `floor(n^((1 - a log 2)/d))`, the per-axis box count of the top layer.
pub fn top_boxes_per_axis(n: f64, d: usize, a: f64) -> u64 {
    n.powf((1.0 - a * std::f64::consts::LN_2) / d as f64).floor() as u64
}

/// Expected number of vertices in a layer-`k` box,
/// `2^d (1 - e^(-dL)) (2 e^(-L))^(kd)`.
pub fn mu1(k: u32, d: usize, l: f64) -> f64 {
    let d = d as f64;
    2f64.powf(d) * (1.0 - (-d * l).exp()) * (2.0 * (-l).exp()).powf(k as f64 * d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredBoxes {
    pub dim: usize,
    /// Number of layers `K`.
    pub layers: u32,
    /// Boxes per axis in the top layer `K - 1`.
    pub top_per_axis: u64,
    /// Band exponent step `b = Lα/γ`.
    pub band_step: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl LayeredBoxes {
    pub fn per_axis(&self, k: u32) -> u64 {
        self.top_per_axis << (self.layers - 1 - k)
    }

    pub fn box_count(&self, k: u32) -> u64 {
        self.per_axis(k).pow(self.dim as u32)
    }

    pub fn cell_side(&self, k: u32) -> f64 {
        2f64.powi(k as i32 + 1)
    }

    pub fn cell_volume(&self, k: u32) -> f64 {
        self.cell_side(k).powi(self.dim as i32)
    }

    pub fn window_side(&self) -> f64 {
        self.top_per_axis as f64 * 2f64.powi(self.layers as i32)
    }

    /// Weight band `(lo, hi]` of layer `k`.
    pub fn band(&self, k: u32) -> (f64, f64) {
        ((k as f64 * self.band_step).exp(), ((k + 1) as f64 * self.band_step).exp())
    }

    /// Layer whose band contains `w`; `None` for `w <= 1` or above the top band.
    pub fn layer_of_weight(&self, w: f64) -> Option<u32> {
        if !(w > 1.0) {
            return None;
        }
        let mut k = (w.ln() / self.band_step).ceil() as i64 - 1;
        // Correct the guess against the exact band bounds.
        while k > 0 && w <= self.band(k as u32).0 {
            k -= 1;
        }
        while k >= 0 && w > self.band(k as u32).1 {
            k += 1;
        }
        let k = u32::try_from(k.max(0)).ok()?;
        (k < self.layers).then_some(k)
    }

    /// Layer and linear box index (axis 0 fastest) of a vertex.
    pub fn box_of(&self, position: &[f64], weight: f64) -> Option<(u32, u64)> {
        let k = self.layer_of_weight(weight)?;
        let (len, count) = (self.cell_side(k), self.per_axis(k));
        let mut coords = Vec::with_capacity(self.dim);
        for &x in position {
            coords.push(locate(x, 0.0, len, count)?);
        }
        Some((k, linear_index(&coords, &vec![count; self.dim])))
    }

    pub fn parent(&self, k: u32, index: u64) -> Option<u64> {
        if k + 1 >= self.layers {
            return None;
        }
        let coords: Vec<u64> = linear_coords(index, &vec![self.per_axis(k); self.dim])
            .into_iter()
            .map(|c| c / 2)
            .collect();
        Some(linear_index(&coords, &vec![self.per_axis(k + 1); self.dim]))
    }

    /// The `2^d` children of box `index` in layer `k >= 1`, in order of `e`.
    pub fn children(&self, k: u32, index: u64) -> Vec<u64> {
        if k == 0 {
            return Vec::new();
        }
        let coords = linear_coords(index, &vec![self.per_axis(k); self.dim]);
        let counts = vec![self.per_axis(k - 1); self.dim];
        (0..1u64 << self.dim)
            .map(|e| {
                let child: Vec<u64> = coords.iter().enumerate().map(|(i, &c)| 2 * c + (e >> i & 1)).collect();
                linear_index(&child, &counts)
            })
            .collect()
    }

    /// Lower corner of box `index` in layer `k`.
    pub fn corner(&self, k: u32, index: u64) -> Vec<f64> {
        let len = self.cell_side(k);
        linear_coords(index, &vec![self.per_axis(k); self.dim])
            .into_iter()
            .map(|c| c as f64 * len)
            .collect()
    }
}

/// Builds the layer family for `params` after checking
/// `0 < a < 1/log 2`, `(γ/2) log 2 < L < log 2` and `S >= 2`.
pub fn build_layered_boxes(params: &SfpParams, lspec: &LayeredSpec) -> Result<LayeredBoxes, ConstellationError> {
    params
        .validate()
        .map_err(|e| ConstellationError::InvalidParams(e.to_string()))?;
    let ln2 = std::f64::consts::LN_2;
    let gamma = params.gamma();
    let bad = |m: String| Err(ConstellationError::InvalidParams(m));
    if !(lspec.a > 0.0 && lspec.a < 1.0 / ln2) {
        return bad(format!("a = {} must lie in (0, 1/log 2)", lspec.a));
    }
    let l_min = gamma / 2.0 * ln2;
    if !(lspec.l > l_min && lspec.l < ln2) {
        return bad(format!("L = {} must lie in ({l_min}, log 2)", lspec.l));
    }
    if !(lspec.s >= 2.0 && lspec.s.is_finite()) {
        return bad(format!("S must be >= 2, got {}", lspec.s));
    }
    let d = params.dim;
    let (layers, top_per_axis) = match lspec.mode {
        LayeredMode::PaperFaithful => (
            layer_count(params.volume, d, lspec.a),
            top_boxes_per_axis(params.volume, d, lspec.a),
        ),
        LayeredMode::Explicit => match (lspec.layers, lspec.top_boxes_per_axis) {
            (Some(k), Some(m)) => (k, m),
            _ => return bad("explicit mode needs layers and top_boxes_per_axis".into()),
        },
    };
    if layers < 1 {
        return Err(ConstellationError::Infeasible("n too small for layered construction".into()));
    }
    if top_per_axis < 1 || layers > 62 {
        return bad(format!("need at least one top box and at most 62 layers, got M = {top_per_axis}, K = {layers}"));
    }
    let boxes = LayeredBoxes {
        dim: d,
        layers,
        top_per_axis,
        band_step: lspec.l * params.alpha / gamma,
        eps1: ln2 - lspec.l,
        eps2: params.alpha * (2.0 * lspec.l / gamma - ln2),
    };
    if boxes.window_side() > params.side() * (1.0 + 1e-12) {
        return bad(format!(
            "window side {} exceeds the box side {}",
            boxes.window_side(),
            params.side()
        ));
    }
    if boxes.box_count(0) as f64 > 1e9 {
        return bad(format!("{} boxes in layer 0 is too many", boxes.box_count(0)));
    }
    Ok(boxes)
}

#[derive(Debug, Clone, Serialize)]
pub struct LayeredReport {
    pub boxes: LayeredBoxes,
    pub warnings: Vec<String>,
    pub good_per_layer: Vec<u64>,
    pub boxes_per_layer: Vec<u64>,
    pub outcome: Result<Constellation, StagedFailure>,
}

struct BoxState {
    star: u32,
    leaves: Vec<u32>,
}

/// Marks good boxes from the top layer down and assembles the tree of good
/// stars: top stars chained in snake order, every good box's star joined to
/// its parent's star, and `ceil(S)` heaviest in-box neighbours hung off each
/// star. Succeeds when the first top box is good, with `D = 1` and
/// `Δ = 2^d + 2`.
pub fn extract_constellation_gamma_in_1_2(g: &SfpGraph, lspec: &LayeredSpec) -> Result<LayeredReport, ConstellationError> {
    let params = g.params();
    let boxes = build_layered_boxes(params, lspec)?;
    let mut warnings = Vec::new();
    let gamma = params.gamma();
    if !(gamma > 1.0 && gamma < 2.0) {
        warnings.push(format!("gamma = {gamma} is outside (1, 2)"));
    }
    let vs = g.vertices();
    let mut members: HashMap<(u32, u64), Vec<u32>> = HashMap::new();
    let mut box_of = vec![None; g.vertex_count()];
    for v in 0..g.vertex_count() as u32 {
        if let Some(b) = boxes.box_of(vs.position(v), vs.weight(v)) {
            members.entry(b).or_default().push(v);
            box_of[v as usize] = Some(b);
        }
    }
    let need = lspec.s + 1.0;
    // The star and its in-box neighbours, heaviest first, or the failing clause.
    let examine = |b: (u32, u64)| -> Result<(u32, Vec<u32>), String> {
        let list = members.get(&b).map(Vec::as_slice).unwrap_or(&[]);
        if (list.len() as f64) < need {
            return Err(format!("holds {} vertices, needs S + 1 = {need}", list.len()));
        }
        let star = *list
            .iter()
            .max_by(|&&x, &&y| vs.weight(x).total_cmp(&vs.weight(y)).then(y.cmp(&x)))
            .unwrap();
        let mut nbrs: Vec<u32> = g
            .graph()
            .neighbors(star)
            .iter()
            .copied()
            .filter(|&w| box_of[w as usize] == Some(b))
            .collect();
        if (nbrs.len() as f64) < lspec.s {
            return Err(format!("star {star} has {} neighbours in its box, needs S = {}", nbrs.len(), lspec.s));
        }
        nbrs.sort_by(|&x, &y| vs.weight(y).total_cmp(&vs.weight(x)).then(x.cmp(&y)));
        Ok((star, nbrs))
    };

    let k_top = boxes.layers - 1;
    let m = boxes.top_per_axis;
    let top_counts = vec![m; boxes.dim];
    let mut good: HashMap<(u32, u64), BoxState> = HashMap::new();
    let mut chain = Vec::new();
    let mut first_failure = None;
    for i in 0..boxes.box_count(k_top) {
        let b = (k_top, linear_index(&snake_coords(i, &top_counts), &top_counts));
        let state = examine(b).and_then(|(star, nbrs)| match chain.last() {
            Some(&prev) if !g.graph().has_edge(prev, star) => {
                Err(format!("star {star} is not adjacent to the previous top star {prev}"))
            }
            _ => Ok((star, nbrs)),
        });
        match state {
            Ok((star, nbrs)) => {
                chain.push(star);
                good.insert(b, BoxState { star, leaves: nbrs });
            }
            Err(clause) => {
                if i == 0 {
                    first_failure = Some(StagedFailure {
                        stage: Stage::GoodBox,
                        witness: vec![b.0 as u64, b.1],
                        detail: format!("first top box {clause}"),
                    });
                }
                break;
            }
        }
    }
    let mut good_per_layer = vec![0u64; boxes.layers as usize];
    good_per_layer[k_top as usize] = chain.len() as u64;
    for k in (0..k_top).rev() {
        let parents: Vec<u64> = {
            let mut p: Vec<u64> = good.keys().filter(|b| b.0 == k + 1).map(|b| b.1).collect();
            p.sort_unstable();
            p
        };
        for pi in parents {
            let parent_star = good[&(k + 1, pi)].star;
            for ci in boxes.children(k + 1, pi) {
                let b = (k, ci);
                if let Ok((star, nbrs)) = examine(b) {
                    if g.graph().has_edge(parent_star, star) {
                        good.insert(b, BoxState { star, leaves: nbrs });
                        good_per_layer[k as usize] += 1;
                    }
                }
            }
        }
    }
    let boxes_per_layer = (0..boxes.layers).map(|k| boxes.box_count(k)).collect();

    let outcome = match first_failure {
        Some(f) => Err(f),
        None => assemble(g, &boxes, lspec, &chain, &good),
    };
    Ok(LayeredReport {
        boxes,
        warnings,
        good_per_layer,
        boxes_per_layer,
        outcome,
    })
}

fn assemble(
    g: &SfpGraph,
    boxes: &LayeredBoxes,
    lspec: &LayeredSpec,
    chain: &[u32],
    good: &HashMap<(u32, u64), BoxState>,
) -> Result<Constellation, StagedFailure> {
    let leaves_per_star = lspec.s.ceil() as usize;
    let mut j = Vec::with_capacity(good.len());
    let mut paths = Vec::new();
    let mut tree_edges = Vec::new();
    let top = boxes.layers - 1;
    let counts = vec![boxes.top_per_axis; boxes.dim];
    // Depth-first over each top box's subtree, top boxes in chain order.
    for (i, &top_star) in chain.iter().enumerate() {
        if i > 0 {
            paths.push(vec![chain[i - 1], top_star]);
            tree_edges.push((chain[i - 1], top_star));
        }
        let root = (top, linear_index(&snake_coords(i as u64, &counts), &counts));
        let mut stack = vec![root];
        while let Some((k, idx)) = stack.pop() {
            let state = &good[&(k, idx)];
            j.push(state.star);
            for &leaf in state.leaves.iter().take(leaves_per_star) {
                tree_edges.push((state.star, leaf));
            }
            for ci in boxes.children(k, idx).into_iter().rev() {
                if let Some(child) = good.get(&(k - 1, ci)) {
                    paths.push(vec![state.star, child.star]);
                    tree_edges.push((state.star, child.star));
                    stack.push((k - 1, ci));
                }
            }
        }
    }
    let params = ConstellationParams {
        s: lspec.s,
        d: 1,
        delta: (1u32 << boxes.dim) + 2,
    };
    let c = Constellation {
        params,
        j,
        paths,
        tree_edges,
    };
    let checked = c.verify().map_err(|v| format!("{}: {v:?}", v.property()));
    let checked = checked.and_then(|()| {
        c.is_subgraph_of(g.graph())
            .then_some(())
            .ok_or_else(|| "tree edge missing from the graph".to_string())
    });
    checked.map_err(|detail| StagedFailure {
        stage: Stage::Verify,
        witness: vec![],
        detail: format!("assembled tree fails {detail}"),
    })?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UndirectedGraph;
    use crate::sfp::VertexSet;

    #[test]
    fn mu1_value() {
        assert!((mu1(3, 1, 0.5) - 1.405).abs() < 5e-4);
    }

    #[test]
    fn cell_volume_example() {
        let b = LayeredBoxes {
            dim: 2,
            layers: 5,
            top_per_axis: 1,
            band_step: 1.0,
            eps1: 0.0,
            eps2: 0.0,
        };
        assert_eq!(b.cell_volume(3), 256.0);
        assert_eq!(b.per_axis(0), 16);
        assert_eq!(b.parent(0, linear_index(&[5, 3], &[16, 16])), Some(linear_index(&[2, 1], &[8, 8])));
        let kids = b.children(1, linear_index(&[2, 1], &[8, 8]));
        assert_eq!(kids.len(), 4);
        for c in kids {
            assert_eq!(b.parent(0, c), Some(linear_index(&[2, 1], &[8, 8])));
        }
    }

    #[test]
    fn bands_are_contiguous() {
        let b = LayeredBoxes {
            dim: 1,
            layers: 6,
            top_per_axis: 1,
            band_step: 0.7,
            eps1: 0.0,
            eps2: 0.0,
        };
        for k in 0..6 {
            let (lo, hi) = b.band(k);
            assert_eq!(b.layer_of_weight(hi), Some(k));
            assert_eq!(b.layer_of_weight(lo.next_up()), Some(k));
            if k + 1 < 6 {
                assert_eq!(b.band(k + 1).0, hi);
            }
        }
        assert_eq!(b.layer_of_weight(1.0), None);
        assert_eq!(b.layer_of_weight(b.band(5).1.next_up()), None);
    }

    fn lspec(k: u32, m: u64) -> LayeredSpec {
        LayeredSpec {
            a: 0.72,
            l: 0.5545,
            s: 2.0,
            mode: LayeredMode::Explicit,
            layers: Some(k),
            top_boxes_per_axis: Some(m),
        }
    }

    #[test]
    fn paper_counts_and_errors() {
        assert_eq!(layer_count(1e7, 1, 0.72), 11);
        assert_eq!(top_boxes_per_axis(1e7, 1, 0.72), 3210);
        let p = SfpParams::new(1, 1.5, 1.8, 1.0, 3.0).unwrap();
        let paper = LayeredSpec { mode: LayeredMode::PaperFaithful, ..lspec(1, 1) };
        assert_eq!(
            build_layered_boxes(&p, &paper),
            Err(ConstellationError::Infeasible("n too small for layered construction".into()))
        );
        let big = SfpParams::new(1, 1.5, 1.8, 1.0, 100.0).unwrap();
        assert!(build_layered_boxes(&big, &LayeredSpec { l: 0.3, ..lspec(2, 1) }).is_err());
        assert!(build_layered_boxes(&big, &lspec(7, 1)).is_err());
        assert!(build_layered_boxes(&big, &lspec(2, 1)).is_ok());
    }

    /// One layer-1 box [0, 4) and two layer-0 boxes [0, 2), [2, 4), with
    /// b = log 2: band 0 is (1, 2], band 1 is (2, 4].
    #[test]
    fn two_layer_constellation() {
        let params = SfpParams::new(1, 1.5, 1.75, 1.0, 4.0).unwrap();
        assert!((params.gamma() - 1.125).abs() < 1e-12);
        let spec = LayeredSpec {
            l: std::f64::consts::LN_2 * 1.125 / 1.5,
            ..lspec(2, 1)
        };
        // Top star 0 with in-box 1, 2; child stars 3 (in [0,2)) and 6 (in [2,4)).
        let pos = vec![0.5, 1.5, 2.5, 0.2, 0.4, 0.6, 2.2, 2.4, 2.6];
        let w = vec![3.9, 3.0, 2.5, 1.9, 1.5, 1.2, 1.8, 1.4, 1.1];
        let mut edges = vec![(0, 1), (0, 2), (3, 4), (3, 5), (6, 7), (6, 8), (0, 3), (0, 6)];
        let build = |edges: &[(u32, u32)]| {
            let vs = VertexSet::from_parts(1, pos.clone(), w.clone()).unwrap();
            let graph = UndirectedGraph::from_edges(9, edges.iter().copied()).unwrap();
            SfpGraph::from_parts(params, vs, graph, None).unwrap()
        };
        let report = extract_constellation_gamma_in_1_2(&build(&edges), &spec).unwrap();
        assert_eq!(report.good_per_layer, vec![2, 1]);
        assert_eq!(report.boxes_per_layer, vec![2, 1]);
        let c = report.outcome.unwrap();
        assert_eq!(c.j, vec![0, 3, 6]);
        assert_eq!((c.params.d, c.params.delta), (1, 4));
        assert_eq!(c.tree_edges.len(), 8);

        // Cutting the edge to one child leaves that box bad.
        edges.pop();
        let report = extract_constellation_gamma_in_1_2(&build(&edges), &spec).unwrap();
        assert_eq!(report.good_per_layer, vec![1, 1]);
        assert_eq!(report.outcome.unwrap().j, vec![0, 3]);

        // Without in-box neighbours the top box fails.
        let report = extract_constellation_gamma_in_1_2(&build(&[(0, 1), (0, 3)]), &spec).unwrap();
        let f = report.outcome.unwrap_err();
        assert_eq!((f.stage, f.witness), (Stage::GoodBox, vec![1, 0]));
    }
}
