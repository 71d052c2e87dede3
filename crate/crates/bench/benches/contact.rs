use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sfp_core::contact::{exact_mean_extinction, extinction_time_replicas, Simulator};
use sfp_core::sfp::{sample_graph_accelerated, AcceleratedOptions};
use sfp_core::{GraphicalConstruction, SfpParams, UndirectedGraph};

fn engine(c: &mut Criterion) {
    let k5 = UndirectedGraph::from_edges(5, (0..5u32).flat_map(|i| (i + 1..5).map(move |j| (i, j)))).unwrap();
    c.bench_function("extinction K5 λ=1, 1000 replicas", |b| {
        b.iter(|| extinction_time_replicas(black_box(&k5), 1.0, 1e7, 1000, 1).unwrap())
    });
    c.bench_function("exact solver K5 λ=1", |b| b.iter(|| exact_mean_extinction(black_box(&k5), 1.0).unwrap()));

    let params = SfpParams::new(2, 2.5, 2.2, 0.053, 1e4).unwrap();
    let g = sample_graph_accelerated(&params, 3, &AcceleratedOptions::default()).unwrap();
    let all: Vec<u32> = (0..g.vertex_count() as u32).collect();
    let mut sim = Simulator::new();
    let mut group = c.benchmark_group("sfp graph n=1e4");
    group.sample_size(10);
    group.bench_function("full start λ=0.5 to t=10", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            let gc = GraphicalConstruction::build(g.graph(), 0.5, 10.0, seed).unwrap();
            sim.run(&gc, 0.5, &all, &mut ()).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
