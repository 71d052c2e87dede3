//! Slow reference implementations used as oracles.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use sfp_core::constellation::ConstellationParams;
use sfp_core::UndirectedGraph;

const INF: u32 = u32::MAX / 4;

/// All-pairs shortest path lengths by Floyd–Warshall; `INF` when unreachable.
pub fn floyd_warshall(g: &UndirectedGraph) -> Vec<Vec<u32>> {
    let n = g.vertex_count();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v) in g.edges() {
        d[u as usize][v as usize] = 1;
        d[v as usize][u as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn unreachable(d: u32) -> bool {
    d >= INF
}

/// Every simple path from `x` to `y`, by exhaustive depth-first enumeration.
pub fn simple_paths(g: &UndirectedGraph, x: u32, y: u32) -> Vec<Vec<u32>> {
    fn go(g: &UndirectedGraph, path: &mut Vec<u32>, y: u32, out: &mut Vec<Vec<u32>>) {
        let u = *path.last().unwrap();
        if u == y {
            out.push(path.clone());
            return;
        }
        for &w in g.neighbors(u) {
            if !path.contains(&w) {
                path.push(w);
                go(g, path, y, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut vec![x], y, &mut out);
    out
}

/// Which property fails first ("P1" to "P4"), or `None` for a constellation.
pub fn brute_force_check(g: &UndirectedGraph, j: &[u32], p: &ConstellationParams) -> Option<&'static str> {
    let n = g.vertex_count();
    let d = floyd_warshall(g);
    let connected = (0..n).all(|v| !unreachable(d[0][v]));
    if !connected || g.edge_count() != n - 1 {
        return Some("P1");
    }
    if j.iter().any(|&x| (g.degree(x) as f64) < p.s / 2.0) {
        return Some("P2");
    }
    // x *~ y iff some simple path between them avoids J in its interior.
    let mut star_pairs = Vec::new();
    for (a, &x) in j.iter().enumerate() {
        for &y in &j[a + 1..] {
            let adjacent = simple_paths(g, x, y)
                .iter()
                .any(|path| path[1..path.len() - 1].iter().all(|v| !j.contains(v)));
            if adjacent {
                star_pairs.push((x, y));
            }
        }
    }
    if star_pairs.iter().any(|&(x, y)| d[x as usize][y as usize] > p.d) {
        return Some("P3");
    }
    let index = |v: u32| j.iter().position(|&x| x == v).unwrap() as u32;
    let reduced = UndirectedGraph::from_edges(j.len(), star_pairs.iter().map(|&(x, y)| (index(x), index(y)))).unwrap();
    let rd = floyd_warshall(&reduced);
    let reduced_tree = reduced.edge_count() + 1 == j.len() && (0..j.len()).all(|v| !unreachable(rd[0][v]));
    let max_degree = (0..j.len() as u32).map(|v| reduced.degree(v)).max().unwrap_or(0);
    if !reduced_tree || max_degree > p.delta as usize {
        return Some("P4");
    }
    None
}

/// Random labelled tree on `n` vertices (random attachment) with a random
/// number of extra edges or missing edges, so every property gets exercised.
pub fn random_instance<R: Rng>(rng: &mut R) -> (UndirectedGraph, Vec<u32>, ConstellationParams) {
    let n = rng.random_range(1..=7usize);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = (1..n).map(|i| (order[rng.random_range(0..i)], order[i])).collect();
    match rng.random_range(0..6) {
        0 if n >= 3 => {
            let (u, v) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
            if u != v && !edges.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u)) {
                edges.push((u, v));
            }
        }
        1 if !edges.is_empty() => {
            let k = rng.random_range(0..edges.len());
            edges.swap_remove(k);
        }
        _ => {}
    }
    let g = UndirectedGraph::from_edges(n, edges).unwrap();
    let k = rng.random_range(1..=n);
    let mut j: Vec<u32> = (0..n as u32).collect();
    j.shuffle(rng);
    j.truncate(k);
    let p = ConstellationParams::new(
        if rng.random_bool(0.7) {
            2.0
        } else {
            rng.random_range(2..=5) as f64 + 0.5
        },
        rng.random_range(1..=4),
        rng.random_range(2..=4),
    )
    .unwrap();
    (g, j, p)
}
