use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lep_core::experiments::{self, bundled, bundled_names, ExperimentConfig};
use lep_core::pinning::compute_pins;
use lep_core::validation::{invariant_suite, validate_oracle};
use lep_core::Error;

#[derive(Parser)]
#[command(name = "lep", version, about = "Graph-state purification simulator and strategy comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy of a config and write trace CSVs plus summary.json.
    Run {
        /// Path to a TOML config, or the name of a bundled one.
        config: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a fixed-fidelity or fixed-resources sweep and write cells.csv and grid.json.
    Sweep {
        config: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the engine with the dense oracle and check the invariants.
    Validate {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Recompute the reference tables and write them as JSON.
    Pin {
        #[arg(short, long, default_value = "crates/core/tests/data/pinned.json")]
        out: PathBuf,
    },
    /// List the bundled configs.
    Configs,
}

enum Failure {
    Config(anyhow::Error),
    Check(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_)) => Failure::Config(e),
            _ => Failure::Other(e),
        }
    }
}

fn load(name: &str) -> anyhow::Result<ExperimentConfig> {
    if Path::new(name).exists() {
        return Ok(ExperimentConfig::load(Path::new(name))?);
    }
    match bundled(name) {
        Some(text) => Ok(ExperimentConfig::parse(text).with_context(|| format!("bundled config {name}"))?),
        None => Err(Error::Config(format!("{name}: no such file or bundled config")).into()),
    }
}

fn out_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| experiments::default_out_dir(cfg))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let summary = experiments::run_scenario(&cfg, &dir).map_err(anyhow::Error::from)?;
            for s in &summary.strategies {
                match (s.final_fidelity, s.final_resources, s.rounds) {
                    (Some(f), Some(r), Some(k)) => {
                        println!("{:<14} rounds {:>3}  F {:.6}  R {:.6e}  {:?}", s.strategy, k, f, r, s.end.unwrap())
                    }
                    _ => println!("{:<14} {}", s.strategy, s.status),
                }
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let cells = cfg.sweep.as_ref().map(|s| s.pw.values().len() * s.pz.values().len()).unwrap_or(0);
            if cells > 100 {
                eprintln!("warning: {cells} cells; fine grids can take a long time");
            }
            let result = experiments::run_sweep(&cfg, &dir).map_err(anyhow::Error::from)?;
            let failed = result.cells.iter().filter(|c| c.status != "ok").count();
            println!("{} cells, {} failed, wrote {}", result.cells.len(), failed, dir.display());
        }
        Command::Validate { cases, seed } => {
            let start = Instant::now();
            let report = validate_oracle(cases, seed).map_err(anyhow::Error::from)?;
            let (lambda, prob, residual) = report.worst();
            println!(
                "oracle: {} cases, worst lambda {lambda:.2e}, probability {prob:.2e}, residual {residual:.2e} ({:.1?})",
                report.cases.len(),
                start.elapsed()
            );
            let mut failed: Vec<String> = report.failures().map(|c| format!("oracle: {}", c.description)).collect();
            for check in invariant_suite(seed).map_err(anyhow::Error::from)? {
                println!("{} {}: {}", if check.passed { "pass" } else { "FAIL" }, check.name, check.detail);
                if !check.passed {
                    failed.push(check.name.to_string());
                }
            }
            if !failed.is_empty() {
                return Err(Failure::Check(failed.join("\n")));
            }
        }
        Command::Pin { out } => {
            let table = compute_pins().map_err(anyhow::Error::from)?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent).map_err(anyhow::Error::from)?;
            }
            table.save(&out).map_err(anyhow::Error::from)?;
            for (name, entry) in &table.entries {
                println!("{name:<24} {:<6} {}", entry.source, &entry.hash[..12]);
            }
            println!("wrote {}", out.display());
        }
        Command::Configs => {
            for name in bundled_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("{e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Check(what)) => {
            eprintln!("validation failed:\n{what}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
