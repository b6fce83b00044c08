use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use dual_lcs::commands::{run_command, Command};
use dual_lcs::config::parse_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Ftle,
    LineSweep,
    ClassicalPoincare,
    DualPoincare,
    Classify,
    Sphere,
    FdCompare,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Ftle => Command::Ftle,
            CommandArg::LineSweep => Command::LineSweep,
            CommandArg::ClassicalPoincare => Command::ClassicalPoincare,
            CommandArg::DualPoincare => Command::DualPoincare,
            CommandArg::Classify => Command::Classify,
            CommandArg::Sphere => Command::Sphere,
            CommandArg::FdCompare => Command::FdCompare,
        }
    }
}

/// Coherent-structure experiments on 3D flows via the intermediate
/// singular-vector direction field.
#[derive(Debug, Parser)]
#[command(name = "dual-lcs", version)]
struct Cli {
    command: CommandArg,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `out` from the config, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to `workers` from the config, then 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Config overrides such as `line.s_max=1000`.
    #[arg(long = "command-overrides", value_name = "KEY=VALUE", num_args = 1..)]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> Result<()> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    let mut config =
        parse_config(&text, &cli.overrides).with_context(|| format!("in {}", cli.config.display()))?;
    let workers = cli.workers.or(config.workers).unwrap_or(1);
    let out = cli
        .out
        .or_else(|| config.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    config.workers = Some(workers);
    config.out = Some(out.display().to_string());
    let report = run_command(&config, cli.command.into(), &out, workers)?;
    for f in &report.soft_failures {
        eprintln!("seed {}: {}", f.seed_id, f.message);
    }
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
