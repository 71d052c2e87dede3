//! Acceptance criteria, run in order on one thread so that runtimes are
//! measured without interference. Each criterion prints one line.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sfp_core::analysis::stats::{mean, standard_error};
use sfp_core::analysis::*;
use sfp_core::constellation::*;
use sfp_core::contact::*;
use sfp_core::graph::connected_graphs;
use sfp_core::seeds::{derive_seed, Purpose};
use sfp_core::sfp::*;
use sfp_core::{SfpParams, UndirectedGraph};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(v: Verdict, elapsed: Duration, budget_s: f64) -> Verdict {
    let ok = elapsed.as_secs_f64() < budget_s;
    Verdict {
        pass: v.pass && ok,
        detail: format!("{}; runtime {:.1} s (limit {budget_s} s)", v.detail, elapsed.as_secs_f64()),
    }
}

/// Fixed pair at distance 1 with unit weights, ρ = 1, α = 2.
fn ac01_edge_law() -> Verdict {
    let start = Instant::now();
    let params = SfpParams::new(1, 2.0, 2.5, 1.0, 3.0).unwrap();
    let vs = VertexSet::from_parts(1, vec![0.5, 1.5], vec![1.0, 1.0]).unwrap();
    let trials = 100_000u64;
    let hits = (0..trials)
        .filter(|&s| reference_edges(&vs, &params, derive_seed(1, Purpose::Edges, s)).unwrap().edge_count() == 1)
        .count();
    let p = 1.0 - (-1.0f64).exp();
    let freq = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let z = (freq - p) / sigma;
    within_budget(
        verdict(z.abs() <= 3.0, format!("frequency {freq:.6} vs {p:.6}, z = {z:.2}")),
        start.elapsed(),
        5.0,
    )
}

fn ac02_weight_tail() -> Verdict {
    let start = Instant::now();
    let n = 1_000_000;
    let w = sample_weights(2.2, n, 2);
    let mut parts = Vec::new();
    let mut pass = true;
    for t in [2.0f64, 4.0, 8.0, 16.0] {
        let p = t.powf(-1.2);
        let hat = w.iter().filter(|&&x| x >= t).count() as f64 / n as f64;
        let z = (hat - p) / (p * (1.0 - p) / n as f64).sqrt();
        pass &= z.abs() <= 4.0;
        parts.push(format!("t={t}: z={z:.2}"));
    }
    within_budget(verdict(pass, parts.join(", ")), start.elapsed(), 5.0)
}

/// `d = 2, α = 2.5, τ = 2.2`, `n = 10^5`, `ρ` giving mean degree about 10.
const FIG_RHO: f64 = 0.053;

fn degree_family() -> SfpParams {
    SfpParams::new(2, 2.5, 2.2, FIG_RHO, 1e5).unwrap()
}

fn ac03_degree_power_law(graphs: &mut Vec<SfpGraph>) -> Verdict {
    let start = Instant::now();
    let params = degree_family();
    let mut inside = 0;
    let mut estimates = Vec::new();
    let mut mean_degrees = Vec::new();
    for seed in 0..10 {
        let g = sample_graph_accelerated(&params, 300 + seed, &AcceleratedOptions::default()).unwrap();
        let fit = degree_tail_fit(g.graph(), DEFAULT_TAIL_FRACTION, TailEstimator::Hill).unwrap();
        let sweep: Vec<f64> = tail_sensitivity(g.graph(), TailEstimator::Hill)
            .into_iter()
            .map(|f| f.map(|f| f.exponent).unwrap_or(f64::NAN))
            .collect();
        assert!(sweep.iter().all(|x| x.is_finite()), "sensitivity sweep failed");
        inside += (1.2..=1.8).contains(&fit.exponent) as usize;
        estimates.push(format!("{:.3}", fit.exponent));
        mean_degrees.push(2.0 * g.graph().edge_count() as f64 / g.vertex_count() as f64);
        graphs.push(g);
    }
    within_budget(
        verdict(
            inside >= 9,
            format!(
                "{inside}/10 Hill estimates in [1.2, 1.8] ({}); mean degree {:.2}",
                estimates.join(" "),
                mean(&mean_degrees)
            ),
        ),
        start.elapsed(),
        300.0,
    )
}

fn ac04_degree_weight(graphs: &[SfpGraph]) -> Verdict {
    let slopes: Vec<f64> = graphs.iter().map(|g| degree_weight_scaling(g, 20).unwrap().slope).collect();
    let inside = slopes.iter().filter(|&&s| (s - 0.8).abs() <= 0.1).count();
    let shown: Vec<String> = slopes.iter().map(|s| format!("{s:.3}")).collect();
    verdict(
        inside >= 9 && graphs.len() == 10,
        format!("{inside}/10 slopes within 0.8 ± 0.1 ({})", shown.join(" ")),
    )
}

fn ac05_contact_exactness() -> Verdict {
    let start = Instant::now();
    let replicas = 200_000;
    let mut checked = 0;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut failures = Vec::new();
    let k2 = UndirectedGraph::from_edges(2, [(0, 1)]).unwrap();
    let anchor = exact_mean_extinction(&k2, 1.0).unwrap();
    if (anchor - 2.0).abs() > 1e-12 {
        failures.push(format!("K2 anchor {anchor}"));
    }
    let mut index = 0u64;
    for n in 1..=5 {
        for g in connected_graphs(n) {
            for lambda in [0.3, 1.0, 3.0] {
                index += 1;
                let exact = exact_mean_extinction(&g, lambda).unwrap();
                let rec = extinction_time_replicas(&g, lambda, default_horizon(), replicas, 5000 + index).unwrap();
                assert!(rec.iter().all(|r| !r.censored));
                let taus: Vec<f64> = rec.iter().map(|r| r.tau).collect();
                let z = (mean(&taus) - exact) / standard_error(&taus);
                let label = format!("n={n} m={} λ={lambda}", g.edge_count());
                if z.abs() > worst.0 {
                    worst = (z.abs(), label.clone());
                }
                if z.abs() > 4.0 {
                    failures.push(format!("{label}: z={z:.2}"));
                }
                checked += 1;
            }
        }
    }
    within_budget(
        verdict(
            failures.is_empty(),
            format!(
                "{checked} graph/rate cases, K2 λ=1 exact {anchor}; max |z| = {:.2} at {}{}",
                worst.0,
                worst.1,
                if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
            ),
        ),
        start.elapsed(),
        600.0,
    )
}

fn ac06_monotone_coupling() -> Verdict {
    let start = Instant::now();
    let params = SfpParams::new(2, 2.5, 2.2, FIG_RHO, 200.0).unwrap();
    let g = sample_graph_accelerated(&params, 6, &AcceleratedOptions::default()).unwrap();
    let all: Vec<u32> = (0..g.vertex_count() as u32).collect();
    let (mut containment, mut ordering, mut checks) = (0usize, 0usize, 0usize);
    for k in 0..1000 {
        let gc = GraphicalConstruction::build(g.graph(), 1.0, 20.0, replica_seed(66, k)).unwrap();
        let (_, cert) = coupled_run(&gc, &[0.5, 1.0], &all).unwrap();
        containment += cert.containment_violations();
        ordering += cert.tau_order_violations();
        checks += cert.pairs.iter().map(|p| p.times_checked).sum::<usize>();
    }
    within_budget(
        verdict(
            containment == 0 && ordering == 0,
            format!(
                "1000 replicas on {} vertices, {checks} event times checked: {containment} containment and {ordering} τ-ordering violations",
                g.vertex_count()
            ),
        ),
        start.elapsed(),
        60.0,
    )
}

fn ac07_checker() -> Verdict {
    let start = Instant::now();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    let mut agree = 0;
    let mut passing = 0;
    for _ in 0..500 {
        let (g, j, p) = common::random_instance(&mut rng);
        let fast = is_constellation(&g, &j, &p).err().map(|v| v.property());
        let slow = common::brute_force_check(&g, &j, &p);
        agree += (fast == slow) as usize;
        passing += slow.is_none() as usize;
    }
    within_budget(
        verdict(agree == 500, format!("{agree}/500 agree ({passing} constellations)")),
        start.elapsed(),
        10.0,
    )
}

/// Largest `c >= 0` with `c ℓ <= side`, searched from a log-space guess.
fn count_fits(side: f64, ell: f64) -> u64 {
    let mut c = (side.ln() - ell.ln()).exp().floor().max(0.0) as u64;
    while (c + 1) as f64 * ell <= side {
        c += 1;
    }
    while c > 0 && c as f64 * ell > side {
        c -= 1;
    }
    c
}

fn ac08_partition_arithmetic() -> Verdict {
    let mut feasible = 0;
    let mut mismatches = Vec::new();
    for (dim, alpha) in [(1usize, 1.5), (2, 3.0)] {
        for n in [1e22, 1e23, 1e24, 1e25, 1e26] {
            for a in [13.0, 14.0, 15.0] {
                for theta in [0.985, 0.99, 0.995] {
                    let params = SfpParams::new(dim, alpha, 3.0, 1.0, n).unwrap();
                    let gamma = params.gamma();
                    let s = subdivision_depth(gamma, theta);
                    let np = nu_p(a, theta, s);
                    let nu_s = 0.5 * (np + (a - 1.0) / gamma);
                    let eta = 0.5 * (alpha * nu_s / dim as f64 + (a - 1.0) / (params.tau - 1.0));
                    let spec = PartitionSpec {
                        a,
                        theta,
                        nu_s,
                        eta,
                        mode: PartitionMode::PaperFaithful,
                        ..PartitionSpec::explicit(1.0, vec![])
                    };
                    let Ok(part) = build_partition(&params, &spec) else { continue };
                    feasible += 1;
                    let d = dim as f64;
                    let lnn = n.ln();
                    let lnln = lnn.ln();
                    let mc_axis = count_fits(n.powf(1.0 / d), lnn.powf(a / d));
                    let mut expected = (mc_axis as u128).pow(dim as u32);
                    let mut ok = part.m_c() == expected;
                    for k in 1..=s as usize {
                        let e = (theta.powi(k as i32 - 1) - theta.powi(k as i32)) * a / d;
                        let mut c = 1u64;
                        while ((c + 1) as f64).ln() <= e * lnln {
                            c += 1;
                        }
                        let mk = (c as u128).pow(dim as u32);
                        ok &= part.m_k(k) == mk;
                        expected *= mk;
                    }
                    ok &= part.m_f() == expected;
                    let bound = (n / lnn.powf(np)).floor() as u128;
                    ok &= part.m_f() <= bound;
                    if !ok {
                        mismatches.push(format!("d={dim} n={n:e} A={a} θ={theta}"));
                    }
                }
            }
        }
    }
    verdict(
        mismatches.is_empty() && feasible >= 10,
        format!(
            "{feasible} feasible lattice points, {} mismatches{}",
            mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(": {}", mismatches.join(", ")) }
        ),
    )
}

fn ac09_layered() -> Verdict {
    let (a, l, s, m) = (0.72, 0.5545, 2.0, 2u64);
    let mut freqs = Vec::new();
    let mut bad = Vec::new();
    for (i, n_nominal) in [1e3, 1e5, 1e7].into_iter().enumerate() {
        let k = layer_count(n_nominal, 1, a);
        let window = m as f64 * 2f64.powi(k as i32);
        let params = SfpParams::new(1, 1.5, 1.8, 1.0, window).unwrap();
        let spec = LayeredSpec {
            a,
            l,
            s,
            mode: LayeredMode::Explicit,
            layers: Some(k),
            top_boxes_per_axis: Some(m),
        };
        let mut successes = 0;
        for r in 0..50 {
            let seed = derive_seed(9, Purpose::Graph, (i * 1000 + r) as u64);
            let g = sample_graph_accelerated(&params, seed, &AcceleratedOptions::default()).unwrap();
            let report = extract_constellation_gamma_in_1_2(&g, &spec).unwrap();
            if let Ok(c) = report.outcome {
                successes += 1;
                let (tree, _, j) = c.local_tree().unwrap();
                let check = ConstellationParams::new(s, 1, 4).unwrap();
                if c.params.d != 1 || c.params.delta > 4 || is_constellation(&tree, &j, &check).is_err() || !c.is_subgraph_of(g.graph()) {
                    bad.push(format!("n={n_nominal:e} graph {r}"));
                }
            }
        }
        freqs.push((n_nominal, k, successes as f64 / 50.0));
    }
    let monotone = freqs.windows(2).all(|w| w[0].2 <= w[1].2);
    let shown: Vec<String> = freqs.iter().map(|(n, k, f)| format!("n={n:e} (K={k}): {f:.2}")).collect();
    verdict(
        monotone && bad.is_empty(),
        format!(
            "success frequency {}; {} extracted constellations failed the check{}",
            shown.join(", "),
            bad.len(),
            if bad.is_empty() { String::new() } else { format!(" ({})", bad.join(", ")) }
        ),
    )
}

/// Supercritical γ = 1.5 family at low density.
const TREND_RHO: f64 = 0.0002;
const TREND_HORIZON: f64 = 1e4;

fn ac10_extinction_trend() -> Verdict {
    let start = Instant::now();
    let lambda = 2.0;
    let mut points = Vec::new();
    for (i, n) in [250.0, 500.0, 1000.0, 2000.0].into_iter().enumerate() {
        let params = SfpParams::new(2, 2.5, 2.2, TREND_RHO, n).unwrap();
        let mut records = Vec::with_capacity(200);
        for r in 0..200u64 {
            let key = i as u64 * 10_000 + r;
            let g = sample_graph_accelerated(&params, derive_seed(10, Purpose::Graph, key), &AcceleratedOptions::default())
                .unwrap();
            let mut rec = extinction_time_replicas(g.graph(), lambda, TREND_HORIZON, 1, derive_seed(10, Purpose::Replica, key))
                .unwrap();
            records.push(rec.remove(0));
        }
        points.push(ExtinctionPoint::from_records(n, &records));
    }
    let increasing = points.windows(2).all(|w| w[0].median_tau < w[1].median_tau);
    let fit = extinction_scaling_fit(&points, Predictor::N).unwrap();
    let trend_ok = increasing && fit.slope > 0.0 && fit.r2 > 0.8 && !fit.lower_bound_only;

    let params = SfpParams::new(2, 2.5, 2.2, TREND_RHO, 2000.0).unwrap();
    let g = sample_graph_accelerated(&params, 1010, &AcceleratedOptions::default()).unwrap();
    let hub = (0..g.vertex_count() as u32).max_by_key(|&v| (g.graph().degree(v), std::cmp::Reverse(v))).unwrap();
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let curve = survival_curve_coupled(g.graph(), &lambdas, hub, 100.0, 400, 1011).unwrap();
    let est: Vec<f64> = curve.estimates.iter().map(|e| e.estimate).collect();
    let survival_ok = curve.monotonicity_violations == 0 && est.windows(2).all(|w| w[0] <= w[1]);

    let medians: Vec<String> = points
        .iter()
        .map(|p| format!("{}: {:.1} ({:.0}% censored)", p.n, p.median_tau, 100.0 * p.censored_fraction))
        .collect();
    within_budget(
        verdict(
            trend_ok && survival_ok,
            format!(
                "medians {}; slope {:.3e}, R² {:.3}; survival {:?} with {} coupling violations",
                medians.join(", "),
                fit.slope,
                fit.r2,
                est,
                curve.monotonicity_violations
            ),
        ),
        start.elapsed(),
        1800.0,
    )
}

/// `ACCEPTANCE_ONLY=5,6` runs just those criteria. Criterion 4 reuses the
/// graphs of criterion 3, so selecting 4 also runs 3.
fn selected(id: usize) -> bool {
    let Ok(list) = std::env::var("ACCEPTANCE_ONLY") else {
        return true;
    };
    let ids: Vec<usize> = list.split(',').filter_map(|s| s.trim().parse().ok()).collect();
    ids.contains(&id) || (id == 3 && ids.contains(&4))
}

fn report(id: usize, name: &str, run: impl FnOnce() -> Verdict) -> bool {
    if !selected(id) {
        let _ = std::io::stderr().write_all(format!("[SKIP] criterion {id:>2} {name}\n").as_bytes());
        return true;
    }
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    let line = format!(
        "[{}] criterion {id:>2} {name}: {} [{:.1} s]\n",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    // Written to the raw handle so that the line survives output capture.
    let _ = std::io::stderr().write_all(line.as_bytes());
    v.pass
}

#[test]
fn acceptance_criteria() {
    let mut graphs = Vec::new();
    let results = [
        report(1, "edge-law fidelity", ac01_edge_law),
        report(2, "weight-tail fidelity", ac02_weight_tail),
        report(3, "degree power law", || ac03_degree_power_law(&mut graphs)),
        report(4, "degree-weight scaling", || ac04_degree_weight(&graphs)),
        report(5, "contact-process exactness", ac05_contact_exactness),
        report(6, "monotone coupling", ac06_monotone_coupling),
        report(7, "constellation checker", ac07_checker),
        report(8, "partition arithmetic", ac08_partition_arithmetic),
        report(9, "layered construction", ac09_layered),
        report(10, "extinction growth trend", ac10_extinction_trend),
    ];
    let failed: Vec<usize> = (1..=10).filter(|&i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
