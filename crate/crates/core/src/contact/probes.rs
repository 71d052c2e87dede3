//! Infestation of vertex sets and retention of infection around a star.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;

use super::graphical::GraphicalConstruction;
use super::replicas::replica_seed;
use super::run::{EventKind, Observer, Simulator};
use super::ContactError;
use crate::analysis::stats::{wilson_interval, Interval};
use crate::graph::UndirectedGraph;

/// Fraction `λ / (16e)` of a set that must be infected for it to be infested.
pub fn infestation_fraction(lambda: f64) -> f64 {
    lambda / (16.0 * std::f64::consts::E)
}

/// True iff `|subset ∩ infected| ≥ λ/(16e) |subset|`.
pub fn infested_check(subset: &[u32], infected: &[bool], lambda: f64) -> Result<bool, ContactError> {
    if subset.is_empty() {
        return Err(ContactError::EmptySubset);
    }
    let hit = subset.iter().filter(|&&v| infected[v as usize]).count();
    Ok(hit as f64 >= infestation_fraction(lambda) * subset.len() as f64)
}

/// `S ≥ C λ^-2 log(1/λ) D`, the degree a star needs relative to the spacing
/// of stars. The constant `C` has no known value and must be supplied.
pub fn star_degree_condition(s: f64, d: f64, lambda: f64, c: f64) -> bool {
    s >= c * (1.0 / lambda).ln() * d / (lambda * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetentionPoint {
    pub duration: f64,
    pub retained: u64,
    pub replicas: u64,
    pub frequency: f64,
    pub ci: Interval,
}

/// Tracks how many vertices of a set are infected and stops the run the
/// first time the set is no longer infested.
struct InfestationWatch<'a> {
    member: &'a [bool],
    inside: usize,
    threshold: f64,
    exit: Option<f64>,
}

impl Observer for InfestationWatch<'_> {
    fn on_event(&mut self, time: f64, vertex: u32, kind: EventKind, _: &[bool]) -> ControlFlow<()> {
        if !self.member[vertex as usize] {
            return ControlFlow::Continue(());
        }
        match kind {
            EventKind::Infect { .. } => self.inside += 1,
            EventKind::Recover => self.inside -= 1,
        }
        if (self.inside as f64) < self.threshold {
            self.exit = Some(time);
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    }
}

/// Starting with the closed neighbourhood of `center` fully infected, the
/// fraction of replicas in which that neighbourhood stays infested during the
/// whole of `[0, duration]`, for each of the ascending `durations`. The event
/// is decreasing in the duration, so the curve is nonincreasing replica by
/// replica.
pub fn star_retention_curve(
    graph: &UndirectedGraph,
    center: u32,
    lambda: f64,
    durations: &[f64],
    n_rep: u64,
    seed: u64,
) -> Result<Vec<RetentionPoint>, ContactError> {
    if center as usize >= graph.vertex_count() {
        return Err(ContactError::UnknownVertex(center));
    }
    if n_rep == 0 {
        return Err(ContactError::NoReplicas);
    }
    if durations.is_empty() || durations.windows(2).any(|w| w[0] > w[1]) || durations[0] < 0.0 {
        return Err(ContactError::Unsorted);
    }
    let horizon = *durations.last().unwrap();
    let mut hood: Vec<u32> = graph.neighbors(center).to_vec();
    hood.push(center);
    hood.sort_unstable();
    let mut member = vec![false; graph.vertex_count()];
    for &v in &hood {
        member[v as usize] = true;
    }
    let threshold = infestation_fraction(lambda) * hood.len() as f64;

    let exits: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map_init(Simulator::new, |sim, k| {
            let gc = GraphicalConstruction::build(graph, lambda, horizon, replica_seed(seed, k))?;
            let mut watch = InfestationWatch {
                member: &member,
                inside: hood.len(),
                threshold,
                exit: None,
            };
            sim.run(&gc, lambda, &hood, &mut watch)?;
            Ok(watch.exit.unwrap_or(f64::INFINITY))
        })
        .collect::<Result<_, ContactError>>()?;

    Ok(durations
        .iter()
        .map(|&d| {
            let retained = exits.iter().filter(|&&e| e > d).count() as u64;
            RetentionPoint {
                duration: d,
                retained,
                replicas: n_rep,
                frequency: retained as f64 / n_rep as f64,
                ci: wilson_interval(retained, n_rep, 1.96),
            }
        })
        .collect())
}

pub fn star_retention_probe(
    graph: &UndirectedGraph,
    center: u32,
    lambda: f64,
    duration: f64,
    n_rep: u64,
    seed: u64,
) -> Result<RetentionPoint, ContactError> {
    Ok(star_retention_curve(graph, center, lambda, &[duration], n_rep, seed)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infestation_threshold_arithmetic() {
        // 1000 * 0.1 / (16 e) ≈ 2.2993, so three infected vertices suffice.
        let subset: Vec<u32> = (0..1000).collect();
        let mut infected = vec![false; 1000];
        for v in [5, 70, 900] {
            infected[v] = true;
        }
        assert!(infested_check(&subset, &infected, 0.1).unwrap());
        infected[70] = false;
        infected[900] = false;
        assert!(!infested_check(&subset, &infected, 0.1).unwrap());
        assert!(infested_check(&[], &infected, 0.1).is_err());
    }

    #[test]
    fn zero_duration_is_always_retained() {
        let g = UndirectedGraph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let p = star_retention_probe(&g, 0, 0.5, 0.0, 100, 1).unwrap();
        assert_eq!(p.frequency, 1.0);
    }

    #[test]
    fn isolated_center_follows_exponential_clock() {
        let g = UndirectedGraph::empty(1);
        let p = star_retention_probe(&g, 0, 0.5, 2.0, 20_000, 7).unwrap();
        let exact = (-2.0f64).exp();
        assert!(p.ci.low <= exact && exact <= p.ci.high, "{p:?}");
    }

    #[test]
    fn retention_curve_is_nonincreasing() {
        let edges: Vec<(u32, u32)> = (1..30).map(|i| (0, i)).collect();
        let g = UndirectedGraph::from_edges(30, edges).unwrap();
        let curve = star_retention_curve(&g, 0, 0.8, &[0.5, 1.0, 4.0, 16.0], 300, 2).unwrap();
        assert!(curve.windows(2).all(|w| w[0].retained >= w[1].retained));
    }

    #[test]
    fn degree_condition() {
        // C λ^-2 log(1/λ) D with λ = 0.5, C = 1, D = 2: 4 * ln 2 * 2 ≈ 5.545
        assert!(star_degree_condition(5.6, 2.0, 0.5, 1.0));
        assert!(!star_degree_condition(5.5, 2.0, 0.5, 1.0));
    }
}
