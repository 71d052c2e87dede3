//! Constellations for `γ > 2` from the coarse/fine partition.
//!
//! The stars are the heaviest vertex `x̂_i` of every coarse cell, taken in
//! snake order. The pipeline checks, in order:
//!
//! * E1: every fine cell's largest component has size in
//!   `(β1 (log n)^ν_p, β2 (log n)^ν_p)`;
//! * E2: every star has weight above `(log n)^η` and lies in the largest
//!   component of its fine cell;
//! * E_⊛: every star has at least `c2 (log n)^ν_s` neighbours in its cell;
//! * E_↔: consecutive stars are joined by paths of length at most
//!   `c3 (log n)^ν_p`. Path `i` may only use interior vertices that lie in
//!   `B_i ∪ B_{i+1}` and in largest components of fine cells of one colour of
//!   the chessboard, red for even `i` and blue for odd `i`, which keeps all
//!   paths disjoint apart from shared endpoints.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::partition::{build_partition, validate_thresholds, BoxPartition, CellLocation, PartitionMode, PartitionSpec};
use super::{
    spanning_tree, Constellation, ConstellationError, ConstellationParams, Stage, StagedFailure,
};
use crate::sfp::SfpGraph;

/// Largest component of every nonempty fine cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FineComponents {
    /// Fine cell id to the sorted vertices of its largest component.
    pub cells: BTreeMap<u64, Vec<u32>>,
    pub location: Vec<Option<CellLocation>>,
    pub in_component: Vec<bool>,
    /// Vertices inside a coarse cell but in no fine cell.
    pub margin_vertices: usize,
    /// Vertices outside every coarse cell.
    pub outside_vertices: usize,
}

/// Largest connected component of the subgraph induced by each fine cell.
/// Ties go to the component with the smallest vertex id.
pub fn component_per_fine_cell(g: &SfpGraph, part: &BoxPartition) -> FineComponents {
    let n = g.vertex_count();
    let location: Vec<Option<CellLocation>> =
        (0..n as u32).map(|v| part.locate(g.vertices().position(v))).collect();
    let mut members: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    let (mut margin_vertices, mut outside_vertices) = (0, 0);
    for (v, loc) in location.iter().enumerate() {
        match loc {
            None => outside_vertices += 1,
            Some(CellLocation { fine: None, .. }) => margin_vertices += 1,
            Some(CellLocation { fine: Some(f), .. }) => members.entry(*f).or_default().push(v as u32),
        }
    }
    let mut in_component = vec![false; n];
    let cells = members
        .into_iter()
        .map(|(f, vertices)| {
            let largest: Vec<u32> = g
                .graph()
                .induced(&vertices)
                .largest_component()
                .into_iter()
                .map(|i| vertices[i as usize])
                .collect();
            for &v in &largest {
                in_component[v as usize] = true;
            }
            (f, largest)
        })
        .collect();
    FineComponents {
        cells,
        location,
        in_component,
        margin_vertices,
        outside_vertices,
    }
}

/// E1 over all `m_f` fine cells, empty ones included.
pub fn check_e1(comps: &FineComponents, part: &BoxPartition, spec: &PartitionSpec) -> Result<(), StagedFailure> {
    let scale = part.fine_scale();
    let (lo, hi) = (spec.beta1 * scale, spec.beta2 * scale);
    let fail = |cell: u64, size: usize| StagedFailure {
        stage: Stage::E1,
        witness: vec![cell],
        detail: format!("largest component of fine cell {cell} has {size} vertices, outside ({lo}, {hi})"),
    };
    if (comps.cells.len() as u128) < part.m_f() {
        let empty = (0u64..)
            .zip(comps.cells.keys())
            .find(|(i, &k)| *i != k)
            .map(|(i, _)| i)
            .unwrap_or(comps.cells.len() as u64);
        return Err(fail(empty, 0));
    }
    match comps.cells.iter().find(|(_, c)| !(lo < c.len() as f64 && (c.len() as f64) < hi)) {
        Some((&cell, c)) => Err(fail(cell, c.len())),
        None => Ok(()),
    }
}

/// Heaviest vertex of every coarse cell in snake order; ties go to the
/// smallest id. Fails listing the empty coarse cells.
pub fn find_stars(g: &SfpGraph, location: &[Option<CellLocation>], m_c: u64) -> Result<Vec<u32>, StagedFailure> {
    let mut best: Vec<Option<u32>> = vec![None; m_c as usize];
    let w = g.vertices().weights();
    for (v, loc) in location.iter().enumerate() {
        if let Some(loc) = loc {
            let slot = &mut best[loc.coarse as usize];
            if slot.is_none_or(|b| w[v] > w[b as usize]) {
                *slot = Some(v as u32);
            }
        }
    }
    let empty: Vec<u64> = (0..m_c).filter(|&i| best[i as usize].is_none()).collect();
    if !empty.is_empty() {
        return Err(StagedFailure {
            stage: Stage::Stars,
            detail: format!("{} empty coarse cells", empty.len()),
            witness: empty,
        });
    }
    Ok(best.into_iter().map(Option::unwrap).collect())
}

/// E2: `W > (log n)^η` and membership in the fine cell's largest component.
pub fn check_e2(
    g: &SfpGraph,
    stars: &[u32],
    comps: &FineComponents,
    part: &BoxPartition,
    spec: &PartitionSpec,
) -> Result<(), StagedFailure> {
    let threshold = part.log_n.powf(spec.eta);
    for (i, &x) in stars.iter().enumerate() {
        let w = g.vertices().weight(x);
        if !(w > threshold) {
            return Err(StagedFailure {
                stage: Stage::E2,
                witness: vec![i as u64, x as u64],
                detail: format!("star of coarse cell {i} has weight {w} <= (log n)^eta = {threshold}"),
            });
        }
        if !comps.in_component[x as usize] {
            return Err(StagedFailure {
                stage: Stage::E2,
                witness: vec![i as u64, x as u64],
                detail: format!("star {x} of coarse cell {i} is not in its fine cell's largest component"),
            });
        }
    }
    Ok(())
}

/// E_⊛: every star has at least `c2 (log n)^ν_s` neighbours in its coarse cell.
pub fn check_star_degrees(
    g: &SfpGraph,
    stars: &[u32],
    location: &[Option<CellLocation>],
    part: &BoxPartition,
    spec: &PartitionSpec,
) -> Result<(), StagedFailure> {
    let required = spec.c2 * part.log_n.powf(spec.nu_s);
    for (i, &x) in stars.iter().enumerate() {
        let inside = g
            .graph()
            .neighbors(x)
            .iter()
            .filter(|&&w| location[w as usize].is_some_and(|l| l.coarse == i as u64))
            .count();
        if (inside as f64) < required {
            return Err(StagedFailure {
                stage: Stage::EStar,
                witness: vec![i as u64, x as u64],
                detail: format!("star {x} has {inside} neighbours in its cell, needs {required}"),
            });
        }
    }
    Ok(())
}

/// Breadth-first search from `source` to `target` through vertices accepted
/// by `allowed`, reusing `parent` (all `u32::MAX` on entry and exit).
fn restricted_path<F: Fn(u32) -> bool>(
    g: &SfpGraph,
    source: u32,
    target: u32,
    allowed: F,
    parent: &mut [u32],
) -> Option<Vec<u32>> {
    let mut touched = vec![source];
    parent[source as usize] = source;
    let mut queue = VecDeque::from([source]);
    let mut found = false;
    'search: while let Some(u) = queue.pop_front() {
        for &w in g.graph().neighbors(u) {
            if parent[w as usize] != u32::MAX {
                continue;
            }
            if w == target {
                parent[w as usize] = u;
                touched.push(w);
                found = true;
                break 'search;
            }
            if allowed(w) {
                parent[w as usize] = u;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    let path = found.then(|| {
        let mut path = vec![target];
        let mut cur = target;
        while cur != source {
            cur = parent[cur as usize];
            path.push(cur);
        }
        path.reverse();
        path
    });
    for v in touched {
        parent[v as usize] = u32::MAX;
    }
    path
}

/// E_↔: a shortest colour-restricted path between every pair of consecutive
/// stars, red interiors for even pairs and blue for odd ones.
pub fn build_star_paths(
    g: &SfpGraph,
    part: &BoxPartition,
    stars: &[u32],
    comps: &FineComponents,
    spec: &PartitionSpec,
) -> Result<Vec<Vec<u32>>, StagedFailure> {
    let bound = spec.c3 * part.fine_scale();
    // 0: unusable, 1: red, 2: blue.
    let colour: Vec<u8> = (0..g.vertex_count())
        .map(|v| match comps.location[v] {
            Some(CellLocation { fine: Some(f), .. }) if comps.in_component[v] => {
                if part.is_red(f) {
                    1
                } else {
                    2
                }
            }
            _ => 0,
        })
        .collect();
    let mut parent = vec![u32::MAX; g.vertex_count()];
    let mut paths = Vec::with_capacity(stars.len().saturating_sub(1));
    for i in 0..stars.len().saturating_sub(1) {
        let want = if i % 2 == 0 { 1 } else { 2 };
        let cells = [i as u64, i as u64 + 1];
        let allowed = |v: u32| {
            colour[v as usize] == want
                && comps.location[v as usize].is_some_and(|l| cells.contains(&l.coarse))
        };
        let path = restricted_path(g, stars[i], stars[i + 1], allowed, &mut parent);
        let witness = vec![i as u64, i as u64 + 1];
        match path {
            None => {
                return Err(StagedFailure {
                    stage: Stage::EPath,
                    witness,
                    detail: format!(
                        "no {} path between stars {} and {} inside their cells",
                        if want == 1 { "red" } else { "blue" },
                        stars[i],
                        stars[i + 1]
                    ),
                })
            }
            Some(p) if (p.len() - 1) as f64 > bound => {
                return Err(StagedFailure {
                    stage: Stage::EPath,
                    witness,
                    detail: format!("shortest path has length {}, bound is {bound}", p.len() - 1),
                })
            }
            Some(p) => paths.push(p),
        }
    }
    Ok(paths)
}

/// Independent check of a path family: simple paths along host edges,
/// correct endpoints, length at most `bound`, and vertex-disjoint apart from
/// endpoints shared by consecutive paths.
pub fn validate_star_paths(g: &SfpGraph, stars: &[u32], paths: &[Vec<u32>], bound: f64) -> Result<(), String> {
    if paths.len() + 1 != stars.len().max(1) {
        return Err(format!("{} paths for {} stars", paths.len(), stars.len()));
    }
    let mut owner = std::collections::HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        if p.first() != Some(&stars[i]) || p.last() != Some(&stars[i + 1]) {
            return Err(format!("path {i} has wrong endpoints"));
        }
        if (p.len() - 1) as f64 > bound {
            return Err(format!("path {i} has length {} > {bound}", p.len() - 1));
        }
        if let Some(w) = p.windows(2).find(|w| !g.graph().has_edge(w[0], w[1])) {
            return Err(format!("path {i} uses non-edge {}-{}", w[0], w[1]));
        }
        let mut sorted = p.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("path {i} is not simple"));
        }
        for &v in &p[1..p.len() - 1] {
            if let Some(j) = owner.insert(v, i) {
                return Err(format!("vertex {v} is interior to paths {j} and {i}"));
            }
        }
    }
    for (i, p) in paths.iter().enumerate() {
        for end in [p[0], p[p.len() - 1]] {
            if let Some(&j) = owner.get(&end) {
                return Err(format!("endpoint {end} of path {i} is interior to path {j}"));
            }
        }
    }
    Ok(())
}

/// Outcome of the `γ > 2` construction.
#[derive(Debug, Clone, Serialize)]
pub struct Gt2Report {
    pub partition: BoxPartition,
    pub warnings: Vec<String>,
    pub fine_cells_nonempty: usize,
    pub margin_vertices: usize,
    pub outside_vertices: usize,
    /// `|J| >= c1 n (log n)^-A`, when `c1` is set and the mode is paper-faithful.
    pub j_lower_bound_holds: Option<bool>,
    pub outcome: Result<Constellation, StagedFailure>,
}

/// Runs the whole pipeline and assembles the constellation: the union of
/// the star paths plus, for every star in order, up to `S` of its heaviest
/// neighbours that are not yet in the tree, reduced to a BFS spanning tree
/// and verified with `S = 2 c2 (log n)^ν_s` (at least 2),
/// `D = floor(c3 (log n)^ν_p)` (at least 1) and `Δ = 2`.
pub fn extract_constellation_gamma_gt2(g: &SfpGraph, spec: &PartitionSpec) -> Result<Gt2Report, ConstellationError> {
    validate_thresholds(spec)?;
    let params = g.params();
    let part = build_partition(params, spec)?;
    let mut warnings = Vec::new();
    if params.gamma() <= 2.0 {
        warnings.push(format!("gamma = {} is not above 2", params.gamma()));
    }
    let m_c = u64::try_from(part.m_c())
        .ok()
        .filter(|&m| m as usize <= g.vertex_count().max(1) * 16)
        .ok_or_else(|| ConstellationError::InvalidParams(format!("{} coarse cells is too many", part.m_c())))?;
    let comps = component_per_fine_cell(g, &part);
    let mut report = Gt2Report {
        warnings,
        fine_cells_nonempty: comps.cells.len(),
        margin_vertices: comps.margin_vertices,
        outside_vertices: comps.outside_vertices,
        j_lower_bound_holds: None,
        outcome: Err(StagedFailure {
            stage: Stage::Verify,
            witness: vec![],
            detail: String::new(),
        }),
        partition: part.clone(),
    };
    report.outcome = (|| {
        check_e1(&comps, &part, spec)?;
        let stars = find_stars(g, &comps.location, m_c)?;
        check_e2(g, &stars, &comps, &part, spec)?;
        check_star_degrees(g, &stars, &comps.location, &part, spec)?;
        let paths = build_star_paths(g, &part, &stars, &comps, spec)?;
        assemble(g, &part, spec, stars, paths)
    })();
    if let (Ok(c), Some(c1), PartitionMode::PaperFaithful) = (&report.outcome, spec.c1, spec.mode) {
        let n = params.volume;
        report.j_lower_bound_holds = Some(c.j.len() as f64 >= c1 * n / n.ln().powf(spec.a));
    }
    Ok(report)
}

fn assemble(
    g: &SfpGraph,
    part: &BoxPartition,
    spec: &PartitionSpec,
    stars: Vec<u32>,
    paths: Vec<Vec<u32>>,
) -> Result<Constellation, StagedFailure> {
    let s = (2.0 * spec.c2 * part.log_n.powf(spec.nu_s)).max(2.0);
    let d = (spec.c3 * part.fine_scale()).floor().max(1.0) as u32;
    let params = ConstellationParams { s, d, delta: 2 };
    let mut used = vec![false; g.vertex_count()];
    let mut edges = Vec::new();
    for p in &paths {
        for w in p.windows(2) {
            edges.push((w[0], w[1]));
        }
        for &v in p {
            used[v as usize] = true;
        }
    }
    for &x in &stars {
        used[x as usize] = true;
    }
    let weights = g.vertices().weights();
    for &x in &stars {
        let mut nbrs: Vec<u32> = g.graph().neighbors(x).iter().copied().filter(|&w| !used[w as usize]).collect();
        nbrs.sort_by(|&a, &b| weights[b as usize].total_cmp(&weights[a as usize]).then(a.cmp(&b)));
        for &w in nbrs.iter().take(s.ceil() as usize) {
            used[w as usize] = true;
            edges.push((x, w));
        }
    }
    let tree_edges = spanning_tree(stars[0], &edges);
    let c = Constellation {
        params,
        j: stars,
        paths,
        tree_edges,
    };
    c.verify().map_err(|v| StagedFailure {
        stage: Stage::Verify,
        witness: vec![],
        detail: format!("assembled tree fails {}: {v:?}", v.property()),
    })?;
    Ok(c)
}
