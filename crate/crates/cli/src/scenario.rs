//! Scenario configs: one TOML file per analysis, selecting a module and
//! supplying its inputs and parameters.
//!
//! ```toml
//! module = "perp"
//! command = "funding"        # loan, perp, xccy and oracle have subcommands
//! output_dir = "funding"     # relative to --out, or else to this file
//! seed = 7
//!
//! [inputs]                   # paths (or lists of paths) relative to this file
//! input = "data/ticks.csv"
//!
//! [params]                   # the command's flags, `_` for `-`
//! variant = "deribit"
//! band = 0.0005
//! ```

use std::path::{Path, PathBuf};

use clap::Parser;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::commands::Module;
use crate::error::CliError;

const KEYS: [&str; 6] = ["module", "command", "inputs", "params", "output_dir", "seed"];

#[derive(Debug, Parser)]
#[command(name = "cryptoyield")]
struct ModuleCli {
    #[command(subcommand)]
    module: Module,
}

/// A config that passed every check.
#[derive(Debug)]
pub struct ScenarioConfig {
    pub path: PathBuf,
    pub module: Module,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub sha256: String,
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(format!("{f}")),
        Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

/// Loads and checks a config, collecting every problem rather than
/// stopping at the first.
pub fn load(path: &Path) -> Result<ScenarioConfig, Vec<CliError>> {
    let here = |msg: String| CliError::file(path, msg);
    let bytes = std::fs::read(path).map_err(|e| vec![CliError::file(path, e)])?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| vec![CliError::file(path, e)])?;
    let table: Table = toml::from_str(&text).map_err(|e| vec![here(e.to_string().trim_end().to_string())])?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut diags = Vec::new();

    for k in table.keys().filter(|k| !KEYS.contains(&k.as_str())) {
        diags.push(here(format!("unknown key `{k}`")));
    }

    let module = match table.get("module") {
        None => {
            diags.push(here(format!("missing key `module` (one of {})", Module::NAMES.join(", "))));
            None
        }
        Some(Value::String(m)) if Module::NAMES.contains(&m.as_str()) => Some(m.clone()),
        Some(v) => {
            diags.push(here(format!("unknown module {v} (one of {})", Module::NAMES.join(", "))));
            None
        }
    };

    let mut argv = vec!["cryptoyield".to_string()];
    if let Some(m) = &module {
        argv.push(m.clone());
        match (Module::has_commands(m), table.get("command")) {
            (true, Some(Value::String(c))) => argv.push(c.clone()),
            (true, Some(v)) => diags.push(here(format!("`command` must be a string, got {v}"))),
            (true, None) => diags.push(here(format!("module `{m}` needs a `command`"))),
            (false, Some(_)) => diags.push(here(format!("module `{m}` takes no `command`"))),
            (false, None) => {}
        }
    }

    match table.get("inputs") {
        None => {}
        Some(Value::Table(inputs)) => {
            for (k, v) in inputs {
                let paths = match v {
                    Value::String(rel) => vec![rel.as_str()],
                    Value::Array(items) => items.iter().filter_map(Value::as_str).collect(),
                    _ => vec![],
                };
                if paths.is_empty() || matches!(v, Value::Array(items) if items.len() != paths.len()) {
                    diags.push(here(format!("input `{k}` must be a path or a list of paths")));
                    continue;
                }
                for rel in paths {
                    let p = base.join(rel);
                    if !p.is_file() {
                        diags.push(here(format!("input `{k}`: file not found: {}", p.display())));
                    }
                    argv.push(format!("{}={}", flag(k), p.display()));
                }
            }
        }
        Some(_) => diags.push(here("`inputs` must be a table".into())),
    }

    match table.get("params") {
        None => {}
        Some(Value::Table(params)) => {
            for (k, v) in params {
                let values = match v {
                    Value::Array(items) => items.iter().map(scalar).collect::<Option<Vec<_>>>(),
                    v => scalar(v).map(|s| vec![s]),
                };
                match values {
                    None => diags.push(here(format!("parameter `{k}` must be a scalar or a list of scalars"))),
                    Some(vs) if matches!(v, Value::Boolean(_)) => {
                        if vs[0] == "true" {
                            argv.push(flag(k));
                        }
                    }
                    Some(vs) => argv.extend(vs.iter().map(|s| format!("{}={s}", flag(k)))),
                }
            }
        }
        Some(_) => diags.push(here("`params` must be a table".into())),
    }

    let seed = match table.get("seed") {
        None => None,
        Some(Value::Integer(s)) if *s >= 0 => Some(*s as u64),
        Some(v) => {
            diags.push(here(format!("`seed` must be a non-negative integer, got {v}")));
            None
        }
    };

    let stem = path.file_stem().map(PathBuf::from).unwrap_or_else(|| "report".into());
    let output_dir = match table.get("output_dir") {
        None => stem,
        Some(Value::String(s)) => PathBuf::from(s),
        Some(v) => {
            diags.push(here(format!("`output_dir` must be a string, got {v}")));
            stem
        }
    };

    let parsed = if module.is_some() {
        match ModuleCli::try_parse_from(&argv) {
            Ok(cli) => Some(cli.module),
            Err(e) => {
                let msg = e.to_string();
                let first = msg.lines().next().unwrap_or_default();
                diags.push(here(first.trim_start_matches("error: ").to_string()));
                None
            }
        }
    } else {
        None
    };

    match parsed {
        Some(module) if diags.is_empty() => {
            let checks = module.check();
            if !checks.is_empty() {
                return Err(checks);
            }
            Ok(ScenarioConfig {
                path: path.to_path_buf(),
                module,
                output_dir,
                seed,
                sha256: hex::encode(Sha256::digest(&bytes)),
            })
        }
        _ => Err(diags),
    }
}
