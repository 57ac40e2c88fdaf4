//! Experiment driver: configuration-first, flags override scalars, every
//! artifact deterministic for a fixed (config, seed).

// Validation uses `!(x > 0.0)` style comparisons on purpose: they must
// reject NaN, which the un-negated form would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "nplap", about = "Numerical laboratory for the weighted normalized p-Laplace Dirichlet problem")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the worker thread count (0 = library default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the grid spacing.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Randomized pointwise inequality suites.
    CheckPoint,
    /// Continuation solve of the configured Dirichlet problem.
    Solve,
    /// Estimate sweep over the configured parameter grid.
    Sweep,
    /// Radial blow-up table.
    Counterexample,
    /// Hölder-norm diagnostics.
    Holder,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckPoint => "check-point",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Counterexample => "counterexample",
            Command::Holder => "holder",
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    subcommand: &'a str,
    ok: bool,
    artifacts: &'a [String],
    failures: &'a [String],
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            RunConfig::parse(&text).map_err(|violations| {
                anyhow::anyhow!("invalid configuration:\n  {}", violations.join("\n  "))
            })?
        }
        None => RunConfig::default_config(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.display().to_string();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(h) = cli.h {
        cfg.h = h;
    }
    let violations = cfg.validate();
    if !violations.is_empty() {
        anyhow::bail!("invalid configuration:\n  {}", violations.join("\n  "));
    }
    Ok(cfg)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .context("configuring worker pool")?;
    }
    let out = PathBuf::from(&cfg.out);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let name = cli.command.name();
    let outcome = match cli.command {
        Command::CheckPoint => commands::check_point(&cfg, &out)?,
        Command::Solve => commands::solve(&cfg, &out)?,
        Command::Sweep => commands::sweep_cmd(&cfg, &out)?,
        Command::Counterexample => commands::counterexample_cmd(&cfg, &out)?,
        Command::Holder => commands::holder_cmd(&cfg, &out)?,
    };

    let summary = Summary {
        subcommand: name,
        ok: outcome.ok,
        artifacts: &outcome.artifacts,
        failures: &outcome.failures,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join(format!("{name}_status.json")), &text)?;
    println!("{text}");
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
