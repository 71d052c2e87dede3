//! Experiment configuration: a JSON document with unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sfp_core::analysis::{PairScope, Predictor, TailEstimator, DEFAULT_TAIL_FRACTION, MIN_SCALING_POINTS};
use sfp_core::constellation::{build_partition, nu_p, subdivision_depth, PartitionMode};
use sfp_core::constellation::{layer_count, top_boxes_per_axis};
use sfp_core::contact::default_horizon;
use sfp_core::sfp::AcceleratedOptions;
use sfp_core::{ConstellationParams, LayeredSpec, PartitionSpec, SfpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Accelerated,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Extinction,
    Survival,
    ConstellationGt2,
    #[serde(rename = "constellation_12")]
    Constellation12,
    Analysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dynamics {
    pub lambdas: Vec<f64>,
    /// Defaults to `min(1e7, e^20)`.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "one")]
    pub n_rep: u64,
    /// Runs every rate on one graphical construction per replica.
    #[serde(default)]
    pub coupled: bool,
    /// Survival pipeline: initially infected vertex, default the
    /// highest-degree vertex.
    #[serde(default)]
    pub seed_vertex: Option<u32>,
}

impl Dynamics {
    pub fn horizon(&self) -> f64 {
        self.t_max.unwrap_or_else(default_horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Box volumes, one scaling point each.
    pub sizes: Vec<f64>,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<Predictor>,
    /// Draw a new graph for every replica instead of one graph per size.
    #[serde(default = "yes")]
    pub fresh_graph_per_replica: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub tail_fraction: f64,
    pub estimator: TailEstimator,
    pub n_bins: usize,
    pub n_pairs: usize,
    pub pair_scope: PairScope,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            tail_fraction: DEFAULT_TAIL_FRACTION,
            estimator: TailEstimator::Hill,
            n_bins: 20,
            n_pairs: 1000,
            pair_scope: PairScope::default(),
        }
    }
}

/// Small graph given edge by edge, for the exact solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleGraph {
    pub vertices: usize,
    pub edges: Vec<(u32, u32)>,
}

/// Derived quantities a config may state; each one present is checked
/// against its formula before anything runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derived {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: SfpParams,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub accelerated: AcceleratedOptions,
    /// Graph file to load instead of sampling one.
    #[serde(default)]
    pub graph: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: Option<Pipeline>,
    #[serde(default)]
    pub dynamics: Option<Dynamics>,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    #[serde(default)]
    pub layered: Option<LayeredSpec>,
    /// Extracted constellations are also checked against these parameters.
    #[serde(default)]
    pub constellation: Option<ConstellationParams>,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub oracle: Option<OracleGraph>,
    /// Independent graphs for the constellation success table.
    #[serde(default = "one")]
    pub graph_replicas: u64,
    #[serde(default)]
    pub derived: Derived,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> u64 {
    1
}
fn yes() -> bool {
    true
}
fn default_predictors() -> Vec<Predictor> {
    vec![Predictor::N]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        ensure!(self.graph_replicas >= 1, "graph_replicas must be at least 1");
        if let Some(dy) = &self.dynamics {
            ensure!(!dy.lambdas.is_empty(), "dynamics.lambdas is empty");
            ensure!(
                dy.lambdas.iter().all(|l| l.is_finite() && *l > 0.0),
                "dynamics.lambdas must be positive and finite"
            );
            ensure!(dy.n_rep >= 1, "dynamics.n_rep must be at least 1");
            ensure!(dy.horizon() > 0.0, "dynamics.t_max must be positive");
        }
        if let Some(ex) = &self.experiment {
            ensure!(
                ex.sizes.len() >= MIN_SCALING_POINTS,
                "experiment.sizes needs at least {MIN_SCALING_POINTS} sizes, got {}",
                ex.sizes.len()
            );
            ensure!(!ex.predictors.is_empty(), "experiment.predictors is empty");
            for &n in &ex.sizes {
                self.model.with_volume(n).validate()?;
            }
        }
        Ok(())
    }

    pub fn dynamics(&self) -> Result<&Dynamics> {
        self.dynamics.as_ref().context("this command needs a `dynamics` block")
    }

    /// Computes every derived quantity the config determines and compares
    /// it with the stated value, if any.
    pub fn derive(&self) -> Result<Derived> {
        let p = &self.model;
        let mut out = Derived {
            gamma: Some(p.gamma()),
            ..Derived::default()
        };
        if let Some(l) = &self.layered {
            out.k_n = Some(l.layers.unwrap_or_else(|| layer_count(p.volume, p.dim, l.a)));
            let per_axis = l.top_boxes_per_axis.unwrap_or_else(|| top_boxes_per_axis(p.volume, p.dim, l.a));
            out.m_n = per_axis.checked_pow(p.dim as u32);
        }
        if let Some(spec) = &self.partition {
            match spec.mode {
                PartitionMode::PaperFaithful => {
                    let s = subdivision_depth(p.gamma(), spec.theta);
                    out.s = Some(s);
                    out.nu_p = Some(nu_p(spec.a, spec.theta, s));
                }
                PartitionMode::ExplicitSides => {
                    let part = build_partition(p, spec)?;
                    out.s = Some(part.s);
                    out.nu_p = Some(part.nu_p);
                }
            }
        }
        let stated = self.derived;
        check_float("gamma", stated.gamma, out.gamma)?;
        check_float("nu_p", stated.nu_p, out.nu_p)?;
        check_exact("k_n", stated.k_n, out.k_n)?;
        check_exact("m_n", stated.m_n, out.m_n)?;
        check_exact("s", stated.s, out.s)?;
        Ok(out)
    }
}

fn check_float(name: &str, stated: Option<f64>, computed: Option<f64>) -> Result<()> {
    match (stated, computed) {
        (None, _) => Ok(()),
        (Some(x), None) => bail!("derived.{name} = {x} given but the config does not determine it"),
        (Some(x), Some(y)) => {
            ensure!(
                (x - y).abs() <= 1e-9 * y.abs().max(1.0),
                "derived.{name}: config states {x}, formula gives {y}"
            );
            Ok(())
        }
    }
}

fn check_exact<T: PartialEq + std::fmt::Display>(name: &str, stated: Option<T>, computed: Option<T>) -> Result<()> {
    match (stated, computed) {
        (None, _) => Ok(()),
        (Some(x), None) => bail!("derived.{name} = {x} given but the config does not determine it"),
        (Some(x), Some(y)) if x != y => bail!("derived.{name}: config states {x}, formula gives {y}"),
        _ => Ok(()),
    }
}
