//! `sfp`: sample scale-free percolation graphs, run the contact process on
//! them and search them for constellations.
//!
//! Exit codes: 0 success, 2 config error, 3 no constellation found,
//! 4 runtime error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use commands::{Classify, Ctx, Failure, Status};
use config::ExperimentConfig;
use output::{sha256_hex, Format, Output};

#[derive(Parser)]
#[command(name = "sfp", version, about = "Contact process on scale-free percolation graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, default all cores. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample a graph and write it to graph.sfpg.
    Generate,
    /// Extinction times from full occupancy, or survival from one vertex.
    Simulate,
    /// Search sampled graphs for a constellation.
    Constellation,
    /// Median extinction time against box size, with scaling fits.
    Experiment,
    /// Exact mean extinction times of a small graph.
    Oracle,
    /// Degree tail, degree-weight scaling, components and hop distances.
    Analyze,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Simulate => "simulate",
            Command::Constellation => "constellation",
            Command::Experiment => "experiment",
            Command::Oracle => "oracle",
            Command::Analyze => "analyze",
        }
    }
}

fn execute(cli: Cli) -> Result<Status, Failure> {
    let path = cli.config.context("--config is required").config()?;
    let mut cfg = ExperimentConfig::load(&path).config()?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    cfg.validate().config()?;
    let derived = cfg.derive().config()?;
    eprintln!("derived: {}", serde_json::to_string(&derived).unwrap_or_default());

    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| anyhow!(e))
            .config()?;
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    // The hash covers everything that determines the results, so not `out`.
    let mut hashed = cfg.clone();
    hashed.out = None;
    let canonical = serde_json::to_value(&hashed).and_then(|v| serde_json::to_vec(&v)).runtime()?;
    let config_hash = sha256_hex(&canonical);

    let mut out = Output::create(&dir, cli.format).runtime()?;
    let ctx = Ctx { cfg: &cfg, out: &mut out };
    let status = match cli.command {
        Command::Generate => commands::generate(ctx),
        Command::Simulate => commands::simulate(ctx),
        Command::Constellation => commands::constellation(ctx),
        Command::Experiment => commands::experiment(ctx),
        Command::Oracle => commands::oracle(ctx),
        Command::Analyze => commands::analyze(ctx),
    }?;
    out.finish(cli.command.name(), config_hash, cfg.seed, derived).runtime()?;
    eprintln!("wrote {}", dir.display());
    Ok(status)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotFound(why)) => {
            eprintln!("no constellation found: {why}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
