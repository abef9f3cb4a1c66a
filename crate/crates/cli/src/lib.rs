//! Batch runner for the `subwave` solvers: reads a TOML run configuration,
//! runs one experiment and writes CSV/JSON artifacts plus a manifest.

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context as _, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::{Context, ToleranceProfile};
use crate::config::{Command, RunConfig};
use crate::output::{content_hash, Artifacts, FileRecord};

#[derive(Debug, Parser)]
#[command(name = "subwave", version, about = "Damped wave experiments on the Heisenberg group and R^d")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random family; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = ToleranceProfile::Default)]
    pub tolerance_profile: ToleranceProfile,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Linear evolution with trajectory and decay report.
    EvolveLinear,
    /// Picard solve with diagnostics and decay report.
    EvolveSemilinear,
    /// Decay-rate table for several Sobolev orders.
    VerifyDecay,
    /// Exponent tables and inequality sweeps.
    GnCheck,
    /// Spectral run against the leapfrog oracle.
    OracleCompare,
    /// Plancherel constant for the configured grid.
    Calibrate,
}

impl Sub {
    pub fn command(self) -> Command {
        match self {
            Sub::EvolveLinear => Command::EvolveLinear,
            Sub::EvolveSemilinear => Command::EvolveSemilinear,
            Sub::VerifyDecay => Command::VerifyDecay,
            Sub::GnCheck => Command::GnCheck,
            Sub::OracleCompare => Command::OracleCompare,
            Sub::Calibrate => Command::Calibrate,
        }
    }
}

/// Process exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Accepted,
    Rejected,
}

pub fn execute(cli: Cli) -> Result<Status> {
    let cmd = cli.command.command();
    let path = cli.config.ok_or_else(|| anyhow!("--config is required"))?;
    let text = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = RunConfig::from_toml(std::str::from_utf8(&text)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.display().to_string());
    }
    let backend = config.validate(cmd)?;
    let out_dir = PathBuf::from(config.output_dir.clone().unwrap_or_else(|| "out".into()));
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let seed = config.seed.unwrap_or(0);
    config.seed = Some(seed);

    let mut artifacts = Artifacts::new(&out_dir)?;
    let checks = {
        let mut ctx = Context {
            config: &mut config,
            backend,
            seed,
            profile: cli.tolerance_profile,
        };
        commands::run(cmd, &mut ctx, &mut artifacts)?
    };
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
    }
    let accepted = checks.iter().all(|c| c.passed);
    let input = FileRecord {
        path: path.display().to_string(),
        bytes: text.len(),
        sha256: content_hash(&text),
    };
    let effective = config.to_toml();
    let manifest = json!({
        "tool": "subwave",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "seed": seed,
        "threads": cli.threads,
        "tolerance_profile": cli.tolerance_profile,
        "config": config,
        "config_toml": effective,
        "config_toml_sha256": content_hash(effective.as_bytes()),
        "inputs": [input],
        "outputs": artifacts.records(),
        "checks": checks,
        "accepted": accepted,
    });
    artifacts.json("manifest.json", &manifest)?;
    Ok(if accepted { Status::Accepted } else { Status::Rejected })
}
