//! `zlab`: reproducible Zaremba and SL2(Z/qZ) experiments.
//!
//! Exit codes: 0 success, 1 mathematical failure (or I/O and cache
//! corruption), 2 usage, 3 resource cap.

mod commands;
mod config;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{config_hash, ExperimentConfig};
use manifest::RunManifest;

/// Invalid input detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "zlab", version, about = "Zaremba and SL2(Z/qZ) expansion experiments")]
struct Cli {
    /// Flat key-value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker count (ZLAB_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Manifest path; defaults to `<first artifact>.manifest.json`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Record wall-clock times in outputs (breaks byte-for-byte reproducibility).
    #[arg(long, global = true)]
    timing: bool,
    /// Overwrite artifacts written under a different config.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal partial-quotient bound for every q in a range.
    Verify(commands::verify::VerifyArgs),
    /// Counting experiment with main term and probes.
    Count(commands::count::CountArgs),
    /// Growth, flattening, generation and non-concentration probes.
    Expand(commands::expand::ExpandArgs),
    /// Box-counting dimension estimates.
    Dimension(commands::dimension::DimensionArgs),
}

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub timing: bool,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use zlab_core::Error as E;
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<E>() {
        Some(E::CapExceeded { .. }) => 3,
        Some(
            E::Precondition(_)
            | E::DegenerateFit(_)
            | E::EmptySet
            | E::NonUnit { .. }
            | E::NotDivisor { .. }
            | E::ModulusMismatch { .. }
            | E::InvalidMeasure(_),
        ) => 2,
        _ => 1,
    }
}

fn init_pool(cfg_threads: usize) -> anyhow::Result<()> {
    let n = match std::env::var("ZLAB_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| UsageError(format!("ZLAB_THREADS={v:?} is not a count")))?,
        Err(_) => cfg_threads,
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let (name, inputs, artifacts) = match &cli.cmd {
        Command::Verify(a) => ("verify", serde_json::to_value(a)?, a.artifacts()),
        Command::Count(a) => {
            a.apply(&mut cfg);
            ("count", serde_json::to_value(a)?, a.artifacts())
        }
        Command::Expand(a) => ("expand", serde_json::to_value(a)?, a.artifacts()),
        Command::Dimension(a) => ("dimension", serde_json::to_value(a)?, a.artifacts()),
    };
    let cfg = cfg.resolve()?;
    init_pool(cfg.threads)?;
    let hash = config_hash(name, &inputs, &cfg);
    for a in &artifacts {
        output::guard(Some(a), &hash, cli.force)?;
    }
    let manifest = RunManifest::begin(name, &hash, inputs, artifacts, cli.manifest.clone())?;
    let ctx = Ctx { cfg, hash, timing: cli.timing };
    let result = match &cli.cmd {
        Command::Verify(a) => commands::verify::run(a, &ctx),
        Command::Count(a) => commands::count::run(a, &ctx),
        Command::Expand(a) => commands::expand::run(a, &ctx),
        Command::Dimension(a) => commands::dimension::run(a, &ctx),
    };
    let code = match &result {
        Ok(c) => *c,
        Err(e) => exit_code(e),
    };
    manifest.finish(i32::from(code))?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("zlab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
