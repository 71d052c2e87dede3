use sfp_core::analysis::largest_component_fraction;
use sfp_core::analysis::stats::ks_two_sample;
use sfp_core::sfp::*;
use sfp_core::SfpParams;

fn degrees(g: &SfpGraph) -> Vec<f64> {
    g.graph().degrees().into_iter().map(|d| d as f64).collect()
}

/// Pooled degree samples of the two samplers are indistinguishable by a
/// two-sample Kolmogorov–Smirnov test, and so are the edge counts.
#[test]
fn accelerated_sampler_matches_reference_in_law() {
    for (dim, alpha, tau, rho, boundary) in [
        (2, 2.5, 2.2, 0.053, Boundary::Box),
        (1, 1.5, 2.5, 0.5, Boundary::Torus),
        (2, 3.0, 3.5, 0.3, Boundary::Torus),
    ] {
        let params = SfpParams::new(dim, alpha, tau, rho, 1500.0).unwrap().with_boundary(boundary);
        let (mut a, mut r, mut ea, mut er) = (vec![], vec![], vec![], vec![]);
        for seed in 0..12 {
            let ga = sample_graph_accelerated(&params, seed, &AcceleratedOptions::default()).unwrap();
            let gr = sample_graph_reference(&params, 1000 + seed).unwrap();
            a.extend(degrees(&ga));
            r.extend(degrees(&gr));
            ea.push(ga.graph().edge_count() as f64);
            er.push(gr.graph().edge_count() as f64);
        }
        let (d, p) = ks_two_sample(&a, &r);
        assert!(p > 1e-3, "degree KS d = {d}, p = {p} for {params:?}");
        let (d, p) = ks_two_sample(&ea, &er);
        assert!(p > 1e-3, "edge-count KS d = {d}, p = {p} for {params:?}");
    }
}

/// On a fixed vertex table every pair is joined with its connection
/// probability, within four binomial standard errors.
#[test]
fn accelerated_pair_frequencies_match_probabilities() {
    let params = SfpParams::new(1, 1.5, 2.0, 0.8, 30.0).unwrap();
    let positions = vec![0.5, 1.7, 2.0, 6.0, 13.0, 29.5];
    let weights = vec![1.0, 1.3, 40.0, 2.5, 7.0, 1.1];
    let vs = VertexSet::from_parts(1, positions.clone(), weights.clone()).unwrap();
    let trials = 20_000;
    let n = positions.len();
    let mut hits = vec![vec![0u32; n]; n];
    for seed in 0..trials {
        let g = accelerated_edges(&vs, &params, seed, &AcceleratedOptions::default()).unwrap();
        for (u, v) in g.edges() {
            hits[u as usize][v as usize] += 1;
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            let p = params
                .connection_probability(&positions[u..=u], &positions[v..=v], weights[u], weights[v])
                .unwrap();
            let freq = hits[u][v] as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
            assert!((freq - p).abs() <= 4.0 * sigma, "pair ({u},{v}): {freq} vs {p}");
        }
    }
}

#[test]
fn largest_component_grows_with_rho_under_shared_marks() {
    let params = SfpParams::new(2, 2.5, 2.2, 1.0, 600.0).unwrap();
    let rhos = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.3];
    for seed in 0..10 {
        let graphs = sample_rho_coupled(&params, &rhos, seed).unwrap();
        let fractions: Vec<f64> = graphs.iter().map(|g| largest_component_fraction(g.graph())).collect();
        assert!(fractions.windows(2).all(|w| w[0] <= w[1]), "{fractions:?}");
    }
}
