//! The subcommands. Each one reads the validated config, writes its files
//! through [`Output`] and reports whether the pipeline found what it was
//! asked for.

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sfp_core::analysis::stats::{mean, median, standard_error, wilson_interval};
use sfp_core::analysis::*;
use sfp_core::constellation::{
    build_layered_boxes, build_partition, extract_constellation_gamma_gt2, extract_constellation_gamma_in_1_2,
};
use sfp_core::contact::{
    coupled_run, exact_mean_extinction, extinction_time_replicas, replica_seed, survival_curve_coupled,
    ReplicaRecord, EXACT_MAX_VERTICES,
};
use sfp_core::seeds::{derive_seed, Purpose};
use sfp_core::sfp::{deserialize_graph, sample_graph_accelerated, sample_graph_reference, write_graph};
use sfp_core::{
    is_constellation, Constellation, GraphicalConstruction, SfpGraph, SfpParams, StagedFailure, UndirectedGraph,
};

use crate::config::{ExperimentConfig, Pipeline, SamplerKind};
use crate::output::Output;

/// Error classes, one per nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e:#}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e:#}"),
        }
    }
}

pub trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

/// A completed command either found what it looked for or stopped at a
/// named stage of a pipeline.
#[derive(Debug, PartialEq)]
pub enum Status {
    Done,
    NotFound(String),
}

pub type CmdResult = Result<Status, Failure>;

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: &'a mut Output,
}

fn sample(cfg: &ExperimentConfig, params: &SfpParams, seed: u64) -> anyhow::Result<SfpGraph> {
    Ok(match cfg.sampler {
        SamplerKind::Accelerated => sample_graph_accelerated(params, seed, &cfg.accelerated)?,
        SamplerKind::Reference => sample_graph_reference(params, seed)?,
    })
}

/// The configured graph file, or graph 0 sampled from the model.
fn primary_graph(ctx: &mut Ctx) -> Result<SfpGraph, Failure> {
    if let Some(path) = &ctx.cfg.graph {
        return deserialize_graph(path)
            .with_context(|| format!("loading {}", path.display()))
            .config();
    }
    let seed = derive_seed(ctx.cfg.seed, Purpose::Graph, 0);
    ctx.out.seed("graph", seed);
    sample(ctx.cfg, &ctx.cfg.model, seed).runtime()
}

fn mean_degree(g: &UndirectedGraph) -> f64 {
    match g.vertex_count() {
        0 => 0.0,
        n => 2.0 * g.edge_count() as f64 / n as f64,
    }
}

#[derive(Serialize)]
struct GraphSummary {
    vertices: usize,
    edges: usize,
    mean_degree: f64,
    gamma: f64,
    graph_seed: Option<u64>,
}

pub fn generate(mut ctx: Ctx) -> CmdResult {
    let g = primary_graph(&mut ctx)?;
    let mut bytes = Vec::new();
    write_graph(&g, &mut bytes).runtime()?;
    ctx.out.write_bytes("graph.sfpg", &bytes).runtime()?;
    let row = GraphSummary {
        vertices: g.vertex_count(),
        edges: g.graph().edge_count(),
        mean_degree: mean_degree(g.graph()),
        gamma: g.params().gamma(),
        graph_seed: g.seed(),
    };
    ctx.out.write_table("summary", &[row]).runtime()?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct ReplicaRow {
    lambda: f64,
    replica: u64,
    seed: u64,
    tau: f64,
    censored: bool,
    final_infected: usize,
}

impl ReplicaRow {
    fn new(r: &ReplicaRecord, seed: u64) -> Self {
        Self {
            lambda: r.lambda,
            replica: r.replica,
            seed,
            tau: r.tau,
            censored: r.censored,
            final_infected: r.final_infected,
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    lambda: f64,
    replicas: usize,
    censored: usize,
    censored_fraction: f64,
    median_tau: f64,
    /// At least half the replicas are censored, so the median is a lower bound.
    median_is_lower_bound: bool,
    mean_tau: f64,
    /// Some replica is censored, so the mean is a lower bound.
    mean_is_lower_bound: bool,
    standard_error: f64,
    ci_low: f64,
    ci_high: f64,
    /// Coupled runs only: containment and ordering violations across rates.
    coupling_violations: Option<usize>,
}

fn summarize(lambda: f64, records: &[ReplicaRecord], coupling_violations: Option<usize>) -> SummaryRow {
    let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
    let censored = records.iter().filter(|r| r.censored).count();
    let se = if taus.len() > 1 { standard_error(&taus) } else { f64::NAN };
    let m = mean(&taus);
    SummaryRow {
        lambda,
        replicas: records.len(),
        censored,
        censored_fraction: censored as f64 / records.len() as f64,
        median_tau: median(&taus),
        median_is_lower_bound: 2 * censored >= records.len(),
        mean_tau: m,
        mean_is_lower_bound: censored > 0,
        standard_error: se,
        ci_low: m - 1.96 * se,
        ci_high: m + 1.96 * se,
        coupling_violations,
    }
}

fn ascending(lambdas: &[f64]) -> Result<(), Failure> {
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Config(anyhow!("dynamics.lambdas must be strictly increasing here")));
    }
    Ok(())
}

pub fn simulate(mut ctx: Ctx) -> CmdResult {
    let pipeline = ctx.cfg.pipeline.unwrap_or(Pipeline::Extinction);
    let dy = ctx.cfg.dynamics().config()?.clone();
    if !matches!(pipeline, Pipeline::Extinction | Pipeline::Survival) {
        return Err(Failure::Config(anyhow!(
            "simulate runs the extinction or survival pipeline, not {pipeline:?}"
        )));
    }
    let g = primary_graph(&mut ctx)?;
    let graph = g.graph();
    let t_max = dy.horizon();
    let root = ctx.cfg.seed;

    if pipeline == Pipeline::Survival {
        ascending(&dy.lambdas)?;
        let v = match dy.seed_vertex {
            Some(v) => v,
            None => (0..graph.vertex_count() as u32)
                .max_by_key(|&v| (graph.degree(v), std::cmp::Reverse(v)))
                .context("graph has no vertices")
                .runtime()?,
        };
        let seed = derive_seed(root, Purpose::Dynamics, 0);
        ctx.out.seed("survival", seed);
        let curve = survival_curve_coupled(graph, &dy.lambdas, v, t_max, dy.n_rep, seed).runtime()?;
        #[derive(Serialize)]
        struct Row {
            lambda: f64,
            survived: u64,
            replicas: u64,
            estimate: f64,
            ci_low: f64,
            ci_high: f64,
        }
        let rows: Vec<Row> = curve
            .estimates
            .iter()
            .map(|e| Row {
                lambda: e.lambda,
                survived: e.survived,
                replicas: e.replicas,
                estimate: e.estimate,
                ci_low: e.ci.low,
                ci_high: e.ci.high,
            })
            .collect();
        ctx.out.write_table("survival", &rows).runtime()?;
        let meta = serde_json::json!({
            "seed_vertex": v,
            "seed_vertex_degree": graph.degree(v),
            "t_max": t_max,
            "monotonicity_violations": curve.monotonicity_violations,
        });
        ctx.out.write_json("survival_meta.json", &meta).runtime()?;
        return Ok(Status::Done);
    }

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    if dy.coupled {
        ascending(&dy.lambdas)?;
        let seed = derive_seed(root, Purpose::Dynamics, 0);
        ctx.out.seed("coupled", seed);
        let lambda_max = *dy.lambdas.last().unwrap();
        let all: Vec<u32> = (0..graph.vertex_count() as u32).collect();
        let per_rep = (0..dy.n_rep)
            .into_par_iter()
            .map(|k| {
                let gc = GraphicalConstruction::build(graph, lambda_max, t_max, replica_seed(seed, k))?;
                let (trajs, cert) = coupled_run(&gc, &dy.lambdas, &all)?;
                let recs: Vec<ReplicaRecord> = trajs
                    .iter()
                    .map(|t| ReplicaRecord {
                        replica: k,
                        lambda: t.lambda,
                        tau: t.tau_or_horizon(),
                        censored: t.censored,
                        final_infected: t.final_infected.len(),
                    })
                    .collect();
                Ok((recs, cert.containment_violations() + cert.tau_order_violations()))
            })
            .collect::<Result<Vec<_>, sfp_core::ContactError>>()
            .runtime()?;
        let violations: usize = per_rep.iter().map(|(_, v)| v).sum();
        for (i, &lambda) in dy.lambdas.iter().enumerate() {
            let recs: Vec<ReplicaRecord> = per_rep.iter().map(|(r, _)| r[i]).collect();
            rows.extend(recs.iter().map(|r| ReplicaRow::new(r, replica_seed(seed, r.replica))));
            summary.push(summarize(lambda, &recs, Some(violations)));
        }
    } else {
        for (i, &lambda) in dy.lambdas.iter().enumerate() {
            let seed = derive_seed(root, Purpose::Dynamics, i as u64);
            ctx.out.seed(format!("lambda[{i}]"), seed);
            let recs = extinction_time_replicas(graph, lambda, t_max, dy.n_rep, seed).runtime()?;
            rows.extend(recs.iter().map(|r| ReplicaRow::new(r, replica_seed(seed, r.replica))));
            summary.push(summarize(lambda, &recs, None));
        }
    }
    ctx.out.write_table("replicas", &rows).runtime()?;
    ctx.out.write_table("summary", &summary).runtime()?;
    Ok(Status::Done)
}

pub fn oracle(mut ctx: Ctx) -> CmdResult {
    let dy = ctx.cfg.dynamics().config()?.clone();
    let graph = match &ctx.cfg.oracle {
        Some(o) => UndirectedGraph::from_edges(o.vertices, o.edges.iter().copied()).config()?,
        None => primary_graph(&mut ctx)?.graph().clone(),
    };
    if graph.vertex_count() > EXACT_MAX_VERTICES {
        return Err(Failure::Runtime(anyhow!(
            "exact solver handles at most {EXACT_MAX_VERTICES} vertices, graph has {}",
            graph.vertex_count()
        )));
    }
    #[derive(Serialize)]
    struct Row {
        lambda: f64,
        vertices: usize,
        edges: usize,
        mean_extinction_time: f64,
    }
    let rows = dy
        .lambdas
        .iter()
        .map(|&lambda| {
            Ok(Row {
                lambda,
                vertices: graph.vertex_count(),
                edges: graph.edge_count(),
                mean_extinction_time: exact_mean_extinction(&graph, lambda)?,
            })
        })
        .collect::<Result<Vec<_>, sfp_core::ContactError>>()
        .runtime()?;
    ctx.out.write_table("oracle", &rows).runtime()?;
    Ok(Status::Done)
}

#[derive(Serialize)]
struct ConstellationRecord {
    replica: u64,
    graph_seed: Option<u64>,
    vertices: usize,
    edges: usize,
    warnings: Vec<String>,
    /// The construction's intermediate quantities.
    diagnostics: Value,
    outcome: Result<Constellation, StagedFailure>,
    /// The output passed the checker and uses only graph edges.
    verified: Option<bool>,
    /// The output is also a constellation for the configured parameters.
    meets_requested: Option<bool>,
}

fn split_report<T: Serialize>(report: &T) -> anyhow::Result<(Value, Vec<String>)> {
    let mut v = serde_json::to_value(report)?;
    let obj = v.as_object_mut().context("report is not an object")?;
    obj.remove("outcome");
    let warnings = serde_json::from_value(obj.remove("warnings").unwrap_or(Value::Array(vec![])))?;
    Ok((v, warnings))
}

pub fn constellation(mut ctx: Ctx) -> CmdResult {
    let cfg = ctx.cfg;
    let gamma = cfg.model.gamma();
    let pipeline = match cfg.pipeline {
        Some(p @ (Pipeline::ConstellationGt2 | Pipeline::Constellation12)) => p,
        Some(p) => return Err(Failure::Config(anyhow!("constellation cannot run pipeline {p:?}"))),
        None if gamma > 2.0 => Pipeline::ConstellationGt2,
        None if gamma > 1.0 && gamma < 2.0 => Pipeline::Constellation12,
        None => return Err(Failure::Config(anyhow!("no constellation construction for γ = {gamma}"))),
    };
    if cfg.graph.is_some() && cfg.graph_replicas > 1 {
        return Err(Failure::Config(anyhow!("graph_replicas > 1 needs sampled graphs, not a graph file")));
    }
    let graphs: Vec<SfpGraph> = if cfg.graph.is_some() {
        vec![primary_graph(&mut ctx)?]
    } else {
        let seeds: Vec<u64> = (0..cfg.graph_replicas)
            .map(|r| derive_seed(cfg.seed, Purpose::Graph, r))
            .collect();
        for (r, &s) in seeds.iter().enumerate() {
            ctx.out.seed(format!("graph[{r}]"), s);
        }
        seeds
            .par_iter()
            .map(|&s| sample(cfg, &cfg.model, s))
            .collect::<anyhow::Result<_>>()
            .runtime()?
    };
    // Structural problems with the spec are config errors, found before any
    // graph is examined.
    let params = *graphs[0].params();
    match pipeline {
        Pipeline::ConstellationGt2 => {
            let spec = cfg.partition.as_ref().context("pipeline constellation_gt2 needs a `partition` block").config()?;
            build_partition(&params, spec).config()?;
        }
        _ => {
            let spec = cfg.layered.as_ref().context("pipeline constellation_12 needs a `layered` block").config()?;
            build_layered_boxes(&params, spec).config()?;
        }
    }

    let records = graphs
        .par_iter()
        .enumerate()
        .map(|(r, g)| {
            let (outcome, (diagnostics, warnings)) = match pipeline {
                Pipeline::ConstellationGt2 => {
                    let rep = extract_constellation_gamma_gt2(g, cfg.partition.as_ref().unwrap())?;
                    (rep.outcome.clone(), split_report(&rep)?)
                }
                _ => {
                    let rep = extract_constellation_gamma_in_1_2(g, cfg.layered.as_ref().unwrap())?;
                    (rep.outcome.clone(), split_report(&rep)?)
                }
            };
            let verified = outcome
                .as_ref()
                .ok()
                .map(|c| c.verify().is_ok() && c.is_subgraph_of(g.graph()));
            let meets_requested = match (&outcome, &cfg.constellation) {
                (Ok(c), Some(p)) => Some(
                    c.local_tree()
                        .is_ok_and(|(tree, _, j)| is_constellation(&tree, &j, p).is_ok()),
                ),
                _ => None,
            };
            Ok(ConstellationRecord {
                replica: r as u64,
                graph_seed: g.seed(),
                vertices: g.vertex_count(),
                edges: g.graph().edge_count(),
                warnings,
                diagnostics,
                outcome,
                verified,
                meets_requested,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .runtime()?;

    let mut lines = Vec::new();
    for rec in &records {
        serde_json::to_writer(&mut lines, rec).runtime()?;
        lines.push(b'\n');
    }
    ctx.out.write_bytes("reports.jsonl", &lines).runtime()?;

    let successes = records.iter().filter(|r| r.outcome.is_ok()).count() as u64;
    let ci = wilson_interval(successes, records.len() as u64, 1.96);
    #[derive(Serialize)]
    struct Row {
        pipeline: &'static str,
        replicas: usize,
        successes: u64,
        rate: f64,
        ci_low: f64,
        ci_high: f64,
    }
    let row = Row {
        pipeline: match pipeline {
            Pipeline::ConstellationGt2 => "constellation_gt2",
            _ => "constellation_12",
        },
        replicas: records.len(),
        successes,
        rate: successes as f64 / records.len() as f64,
        ci_low: ci.low,
        ci_high: ci.high,
    };
    ctx.out.write_table("success", &[row]).runtime()?;

    match records.iter().find_map(|r| r.outcome.as_ref().ok()) {
        Some(c) => {
            ctx.out.write_json("constellation.json", c).runtime()?;
            Ok(Status::Done)
        }
        None => {
            let first = records[0].outcome.as_ref().unwrap_err();
            ctx.out.write_json("failure.json", first).runtime()?;
            Ok(Status::NotFound(format!("stage {:?}: {}", first.stage, first.detail)))
        }
    }
}

pub fn experiment(ctx: Ctx) -> CmdResult {
    let cfg = ctx.cfg;
    let dy = cfg.dynamics().config()?;
    let ex = cfg.experiment.as_ref().context("experiment needs an `experiment` block").config()?;
    if let Some(p) = cfg.pipeline.filter(|p| *p != Pipeline::Extinction) {
        return Err(Failure::Config(anyhow!("experiment runs the extinction pipeline, not {p:?}")));
    }
    if cfg.graph.is_some() {
        return Err(Failure::Config(anyhow!("experiment samples its own graphs; remove `graph`")));
    }
    let t_max = dy.horizon();
    let root = cfg.seed;

    #[derive(Serialize)]
    struct Row {
        lambda: f64,
        n: f64,
        replica: u64,
        graph_seed: u64,
        seed: u64,
        vertices: usize,
        tau: f64,
        censored: bool,
    }
    #[derive(Serialize)]
    struct PointRow {
        lambda: f64,
        n: f64,
        replicas: usize,
        median_tau: f64,
        censored_fraction: f64,
        median_is_lower_bound: bool,
    }
    #[derive(Serialize)]
    struct FitEntry {
        lambda: f64,
        predictor: Predictor,
        fit: Option<ScalingFit>,
        error: Option<String>,
    }

    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut fits = Vec::new();
    for (li, &lambda) in dy.lambdas.iter().enumerate() {
        let dyn_root = derive_seed(root, Purpose::Dynamics, li as u64);
        ctx.out.seed(format!("lambda[{li}]"), dyn_root);
        let mut points = Vec::new();
        for (i, &n) in ex.sizes.iter().enumerate() {
            let params = cfg.model.with_volume(n);
            let key = |r: u64| ((i as u64) << 32) | r;
            let runs: Vec<(ReplicaRecord, u64, u64, usize)> = if ex.fresh_graph_per_replica {
                (0..dy.n_rep)
                    .into_par_iter()
                    .map(|r| {
                        let gseed = derive_seed(root, Purpose::Graph, key(r));
                        let dseed = derive_seed(dyn_root, Purpose::Replica, key(r));
                        let g = sample(cfg, &params, gseed)?;
                        let mut rec = extinction_time_replicas(g.graph(), lambda, t_max, 1, dseed)?.remove(0);
                        rec.replica = r;
                        Ok((rec, gseed, replica_seed(dseed, 0), g.vertex_count()))
                    })
                    .collect::<anyhow::Result<_>>()
                    .runtime()?
            } else {
                let gseed = derive_seed(root, Purpose::Graph, key(0));
                let dseed = derive_seed(dyn_root, Purpose::Replica, i as u64);
                let g = sample(cfg, &params, gseed).runtime()?;
                extinction_time_replicas(g.graph(), lambda, t_max, dy.n_rep, dseed)
                    .runtime()?
                    .into_iter()
                    .map(|rec| (rec, gseed, replica_seed(dseed, rec.replica), g.vertex_count()))
                    .collect()
            };
            let records: Vec<ReplicaRecord> = runs.iter().map(|r| r.0).collect();
            rows.extend(runs.iter().map(|&(rec, graph_seed, seed, vertices)| Row {
                lambda,
                n,
                replica: rec.replica,
                graph_seed,
                seed,
                vertices,
                tau: rec.tau,
                censored: rec.censored,
            }));
            let p = ExtinctionPoint::from_records(n, &records);
            table.push(PointRow {
                lambda,
                n,
                replicas: p.replicas,
                median_tau: p.median_tau,
                censored_fraction: p.censored_fraction,
                median_is_lower_bound: p.median_is_lower_bound(),
            });
            points.push(p);
        }
        for &predictor in &ex.predictors {
            let (fit, error) = match extinction_scaling_fit(&points, predictor) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            fits.push(FitEntry {
                lambda,
                predictor,
                fit,
                error,
            });
        }
    }
    ctx.out.write_table("replicas", &rows).runtime()?;
    ctx.out.write_table("scaling", &table).runtime()?;
    ctx.out.write_json("fits.json", &fits).runtime()?;
    if fits.iter().all(|f| f.fit.is_none()) {
        let why = fits[0].error.clone().unwrap_or_default();
        return Err(Failure::Runtime(anyhow!("no scaling fit succeeded: {why}")));
    }
    Ok(Status::Done)
}

fn to_value<T: Serialize, E: std::fmt::Display>(r: Result<T, E>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

pub fn analyze(mut ctx: Ctx) -> CmdResult {
    let cfg = ctx.cfg;
    if let Some(p) = cfg.pipeline.filter(|p| *p != Pipeline::Analysis) {
        return Err(Failure::Config(anyhow!("analyze runs the analysis pipeline, not {p:?}")));
    }
    let a = &cfg.analysis;
    let g = primary_graph(&mut ctx)?;
    let graph = g.graph();
    let seed = derive_seed(cfg.seed, Purpose::PairSample, 0);
    ctx.out.seed("pairs", seed);
    let distances = chemical_distance_sample(&g, a.n_pairs, seed, a.pair_scope);
    let reachable = distances.iter().filter(|d| d.graph_distance.is_some()).count();
    let report = serde_json::json!({
        "vertices": g.vertex_count(),
        "edges": graph.edge_count(),
        "mean_degree": mean_degree(graph),
        "gamma": g.params().gamma(),
        "largest_component_fraction": largest_component_fraction(graph),
        "tail_fit": to_value(degree_tail_fit(graph, a.tail_fraction, a.estimator)),
        "tail_sensitivity": tail_sensitivity(graph, a.estimator).into_iter().map(to_value).collect::<Vec<_>>(),
        "degree_weight": to_value(degree_weight_scaling(&g, a.n_bins)),
        "distance_pairs": distances.len(),
        "reachable_pairs": reachable,
    });
    ctx.out.write_json("analysis.json", &report).runtime()?;
    #[derive(Serialize)]
    struct DegreeRow {
        vertex: u32,
        weight: f64,
        degree: usize,
    }
    let degrees: Vec<DegreeRow> = (0..g.vertex_count() as u32)
        .map(|v| DegreeRow {
            vertex: v,
            weight: g.vertices().weight(v),
            degree: graph.degree(v),
        })
        .collect();
    ctx.out.write_table("degrees", &degrees).runtime()?;
    ctx.out.write_table("distances", &distances).runtime()?;
    Ok(Status::Done)
}
