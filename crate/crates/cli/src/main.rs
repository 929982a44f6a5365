//! `cryptoyield`: run the yield analyses on files and write reports.
//!
//! Every analysis command prints its summary as JSON, or with `--out DIR`
//! writes `summary.json` and its CSV series there. `run` executes scenario
//! configs and `validate` checks them without computing anything.
//!
//! Exit codes: 0 success, 2 input error, 3 numeric failure.

mod commands;
mod error;
mod report;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::Module;
use error::{CliError, EXIT_INPUT};
use report::{remove_outputs, Provenance};

#[derive(Debug, Parser)]
#[command(name = "cryptoyield", version, about = "Yield analyses for crypto-finance mechanisms")]
struct Cli {
    /// Report directory; for `run`, the root under which each config's
    /// `output_dir` is placed.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo commands (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Module(Module),
    /// Execute scenario configs, writing one report per config.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Check scenario configs and their inputs without executing them.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

/// Provenance of a config-driven run also records the config itself.
#[derive(Serialize)]
struct Invocation<'a> {
    config: Option<String>,
    config_sha256: Option<&'a str>,
    #[serde(flatten)]
    module: &'a Module,
}

fn emit(
    module: &Module,
    seed: Option<u64>,
    out: Option<&Path>,
    config: Option<&scenario::ScenarioConfig>,
) -> Result<Vec<PathBuf>, CliError> {
    let seed = module.seed(seed);
    let report = module.execute(seed)?;
    let invocation = Invocation {
        config: config.map(|c| c.path.display().to_string()),
        config_sha256: config.map(|c| c.sha256.as_str()),
        module,
    };
    let provenance = Provenance::new(&invocation, &module.inputs(), seed)?;
    match out {
        Some(dir) => report.write(dir, &provenance),
        None => {
            let doc = serde_json::to_string_pretty(&report.document(&provenance)).map_err(CliError::input)?;
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{doc}");
            Ok(vec![])
        }
    }
}

fn run_configs(configs: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let mut written = Vec::new();
    for path in configs {
        let result = scenario::load(path)
            .map_err(|diags| {
                let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
                CliError::input(lines.join("\n"))
            })
            .and_then(|cfg| {
                let root =
                    out.map(Path::to_path_buf).unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
                let dir = root.join(&cfg.output_dir);
                let files = emit(&cfg.module, cfg.seed, Some(&dir), Some(&cfg))?;
                println!("{}: {} files in {}", path.display(), files.len(), dir.display());
                Ok(files)
            });
        match result {
            Ok(files) => written.extend(files),
            Err(e) => {
                remove_outputs(&written);
                return Err(e);
            }
        }
    }
    Ok(())
}

fn validate_configs(configs: &[PathBuf]) -> ExitCode {
    let mut failed = false;
    for path in configs {
        match scenario::load(path) {
            Ok(_) => println!("{}: ok", path.display()),
            Err(diags) => {
                failed = true;
                for d in diags {
                    eprintln!("{d}");
                }
            }
        }
    }
    if failed {
        ExitCode::from(EXIT_INPUT)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Module(m) => emit(m, cli.seed, cli.out.as_deref(), None).map(|_| ()),
        Command::Run { configs } => run_configs(configs, cli.out.as_deref()),
        Command::Validate { configs } => return validate_configs(configs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
