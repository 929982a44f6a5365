pub mod amm;
pub mod kelly;
pub mod loan;
pub mod oracle;
pub mod perp;
pub mod rates;
pub mod stake;
pub mod xccy;

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use cryptoyield::IngestError;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;
use crate::report::Report;

/// Seed used by Monte Carlo commands when none is given.
pub const DEFAULT_SEED: u64 = 42;

/// The analysis commands, i.e. everything a scenario config can select.
#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Module {
    /// Validator returns, percentile bands and slashing cost.
    Stake(stake::StakeArgs),
    /// Replay a constant-product pool scenario; impermanent-loss curves.
    Amm(amm::AmmArgs),
    /// Collateralized loans as exchange options; rate curves.
    #[command(subcommand)]
    Loan(loan::LoanCmd),
    /// Perpetual funding and futures basis.
    #[command(subcommand)]
    Perp(perp::PerpCmd),
    /// Interest rates implied by put-call parity on an option chain.
    ImpliedRate(rates::RatesArgs),
    /// Margined cross-currency swaps.
    #[command(subcommand)]
    Xccy(xccy::XccyCmd),
    /// Monte Carlo reference prices.
    #[command(subcommand)]
    Oracle(oracle::OracleCmd),
    /// Log-optimal weights and Sharpe ratios.
    Kelly(kelly::KellyArgs),
}

impl Module {
    pub const NAMES: [&'static str; 8] = ["stake", "amm", "loan", "perp", "implied-rate", "xccy", "oracle", "kelly"];

    /// Modules whose config must also name a subcommand.
    pub fn has_commands(name: &str) -> bool {
        matches!(name, "loan" | "perp" | "xccy" | "oracle")
    }

    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            Module::Stake(a) => vec![a.validators.as_path()],
            Module::Amm(a) => a.inputs(),
            Module::Loan(c) => c.inputs(),
            Module::Perp(c) => c.inputs(),
            Module::ImpliedRate(a) => vec![a.input.as_path()],
            Module::Xccy(c) => c.inputs(),
            Module::Oracle(_) => vec![],
            Module::Kelly(a) => a.prices.iter().map(PathBuf::as_path).collect(),
        }
    }

    /// Seed recorded in the provenance; only Monte Carlo commands draw.
    pub fn seed(&self, given: Option<u64>) -> Option<u64> {
        match self {
            Module::Oracle(_) => Some(given.unwrap_or(DEFAULT_SEED)),
            _ => given,
        }
    }

    /// Loads and validates inputs and parameters without computing,
    /// reporting every problem found.
    pub fn check(&self) -> Vec<CliError> {
        let mut diags: Vec<CliError> = self
            .inputs()
            .into_iter()
            .filter(|p| !p.is_file())
            .map(|p| CliError::file(p, "input file not found"))
            .collect();
        if !diags.is_empty() {
            return diags;
        }
        diags.extend(match self {
            Module::Stake(a) => a.check(),
            Module::Amm(a) => a.check(),
            Module::Loan(c) => c.check(),
            Module::Perp(c) => c.check(),
            Module::ImpliedRate(a) => a.check(),
            Module::Xccy(c) => c.check(),
            Module::Oracle(c) => c.check(),
            Module::Kelly(a) => a.check(),
        });
        diags
    }

    pub fn execute(&self, seed: Option<u64>) -> Result<Report, CliError> {
        match self {
            Module::Stake(a) => a.execute(),
            Module::Amm(a) => a.execute(),
            Module::Loan(c) => c.execute(),
            Module::Perp(c) => c.execute(),
            Module::ImpliedRate(a) => a.execute(),
            Module::Xccy(c) => c.execute(),
            Module::Oracle(c) => c.execute(seed.unwrap_or(DEFAULT_SEED)),
            Module::Kelly(a) => a.execute(),
        }
    }
}

pub fn read_csv<T>(path: &Path, reader: impl FnOnce(File) -> Result<T, IngestError>) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| CliError::file(path, e))?;
    reader(f).map_err(|e| CliError::ingest(path, e))
}

/// Reads a TOML document, or JSON when the extension says so.
pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| CliError::file(path, e))
    } else {
        toml::from_str(&text).map_err(|e| CliError::file(path, e.to_string().trim_end()))
    }
}

/// Collects the error of each check that failed.
pub fn failures<const N: usize>(checks: [Result<(), CliError>; N]) -> Vec<CliError> {
    checks.into_iter().filter_map(Result::err).collect()
}

pub fn ok<T>(r: Result<T, CliError>) -> Result<(), CliError> {
    r.map(|_| ())
}

/// Shortest round-trip text of a float, as used in the CSV tables.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn level_name(level: f64) -> String {
    format!("p{level}")
}
