//! Exact mean extinction times on small graphs.
//!
//! With `m(S)` the mean time to extinction from infected set `S`,
//! first-step analysis gives, for every nonempty `S`,
//!
//! ```text
//! q(S) m(S) - sum_{x in S} m(S - x) - λ sum_{y not in S} N_S(y) m(S + y) = 1,
//! ```
//!
//! where `N_S(y)` counts neighbours of `y` in `S` and `q(S)` is the total
//! outgoing rate. Grouping states by their number of infected vertices makes
//! the system block tridiagonal with diagonal blocks on the diagonal, which is
//! solved by eliminating from the full state downwards and substituting back
//! up from single-vertex states.

use nalgebra::{DMatrix, DVector};

use super::ContactError;
use crate::graph::UndirectedGraph;

pub const EXACT_MAX_VERTICES: usize = 12;

/// Mean extinction time from full occupancy.
pub fn exact_mean_extinction(graph: &UndirectedGraph, lambda: f64) -> Result<f64, ContactError> {
    let m = exact_extinction_means(graph, lambda)?;
    Ok(*m.last().unwrap())
}

/// Mean extinction time from every initial state, indexed by bitmask.
pub fn exact_extinction_means(graph: &UndirectedGraph, lambda: f64) -> Result<Vec<f64>, ContactError> {
    let n = graph.vertex_count();
    if n > EXACT_MAX_VERTICES {
        return Err(ContactError::TooLarge {
            vertices: n,
            limit: EXACT_MAX_VERTICES,
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ContactError::InvalidRate(lambda));
    }
    let nbr_mask: Vec<u32> = (0..n as u32)
        .map(|v| graph.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let full = (1u32 << n) - 1;
    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for s in 0..=full {
        levels[s.count_ones() as usize].push(s);
    }
    let mut pos = vec![0usize; 1 << n];
    for lvl in &levels {
        for (i, &s) in lvl.iter().enumerate() {
            pos[s as usize] = i;
        }
    }
    let out_rate = |s: u32| -> f64 {
        let infections: u32 = (0..n)
            .filter(|&y| s >> y & 1 == 0)
            .map(|y| (nbr_mask[y] & s).count_ones())
            .sum();
        s.count_ones() as f64 + lambda * infections as f64
    };
    // Coupling of level k to level k+1: entry -λ N_S(y) at (S, S + y).
    let up = |k: usize| -> DMatrix<f64> {
        let (rows, cols) = (&levels[k], &levels[k + 1]);
        let mut u = DMatrix::zeros(rows.len(), cols.len());
        for (i, &s) in rows.iter().enumerate() {
            for y in (0..n).filter(|&y| s >> y & 1 == 0) {
                let c = (nbr_mask[y] & s).count_ones();
                if c > 0 {
                    u[(i, pos[(s | 1 << y) as usize])] = -lambda * c as f64;
                }
            }
        }
        u
    };
    // Coupling of level k to level k-1: entry -1 at (S, S - x).
    let down = |k: usize| -> DMatrix<f64> {
        let (rows, cols) = (&levels[k], &levels[k - 1]);
        let mut l = DMatrix::zeros(rows.len(), cols.len());
        for (i, &s) in rows.iter().enumerate() {
            for x in (0..n).filter(|&x| s >> x & 1 == 1) {
                l[(i, pos[(s & !(1 << x)) as usize])] = -1.0;
            }
        }
        l
    };

    let mut means = vec![0.0; 1 << n];
    if n == 0 {
        return Ok(means);
    }
    // Backward pass: m_k = c_k + M_k m_{k-1}.
    let mut c: Vec<DVector<f64>> = vec![DVector::zeros(0); n + 1];
    let mut mm: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); n + 1];
    for k in (1..=n).rev() {
        let size = levels[k].len();
        let mut schur = DMatrix::from_diagonal(&DVector::from_iterator(
            size,
            levels[k].iter().map(|&s| out_rate(s)),
        ));
        let mut rhs = DVector::from_element(size, 1.0);
        if k < n {
            let u = up(k);
            schur += &u * &mm[k + 1];
            rhs -= &u * &c[k + 1];
        }
        let lu = schur.lu();
        c[k] = lu.solve(&rhs).ok_or(ContactError::Singular)?;
        if k > 1 {
            mm[k] = -lu.solve(&down(k)).ok_or(ContactError::Singular)?;
        }
    }
    let mut prev = c[1].clone();
    for (i, &s) in levels[1].iter().enumerate() {
        means[s as usize] = prev[i];
    }
    for k in 2..=n {
        let cur = &c[k] + &mm[k] * &prev;
        for (i, &s) in levels[k].iter().enumerate() {
            means[s as usize] = cur[i];
        }
        prev = cur;
    }
    Ok(means)
}
