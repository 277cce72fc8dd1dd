#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod manifest;
mod table;

use commands::{Output, RunOptions};
use config::ExperimentConfig;
use error::CliError;
use manifest::{sha256_hex, OutputEntry, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "seminorm-bounds", version, about = "Reconstruction-error bounds for sampled semi-norms")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the numerical tolerance of the command.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Strong, weak and exact bounds over an ε grid.
    Bound,
    /// Dual and grid oracles next to the bounds.
    Oracle,
    /// Ψ blocks and tail bounds.
    Psi,
    /// Plot-ready figure data.
    Figures,
    /// Critical radius over an n grid.
    CriticalRadius,
    /// Random-sampling constants and Monte-Carlo concentration.
    Random,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::Oracle => "oracle",
            Command::Psi => "psi",
            Command::Figures => "figures",
            Command::CriticalRadius => "critical-radius",
            Command::Random => "random",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!("--tolerance must be positive (got {t})")));
        }
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let opts = RunOptions { seed: cli.seed, tolerance: cli.tolerance };
    let outputs: Vec<Output> = match cli.command {
        Command::Bound => commands::bound(&cfg, &opts)?,
        Command::Oracle => commands::oracle(&cfg, &opts)?,
        Command::Psi => commands::psi(&cfg, &opts)?,
        Command::Figures => commands::figures(&cfg, &opts)?,
        Command::CriticalRadius => commands::critical_radius_cmd(&cfg, &opts)?,
        Command::Random => commands::random(&cfg, &opts)?,
    };

    fs::create_dir_all(&cli.out)?;
    let mut entries = Vec::with_capacity(outputs.len());
    for o in &outputs {
        fs::write(cli.out.join(&o.name), &o.bytes)?;
        entries.push(OutputEntry { file: o.name.clone(), sha256: sha256_hex(&o.bytes), bytes: o.bytes.len() });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config_sha256: sha256_hex(text.as_bytes()),
        seed: cli.seed,
        operator_seed: cfg.operator.as_ref().and_then(|o| o.seed()),
        threads: rayon::current_num_threads(),
        tolerance: cli.tolerance,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        outputs: entries,
    };
    fs::write(cli.out.join("manifest.json"), manifest.to_json())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
