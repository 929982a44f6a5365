use std::fmt::Display;
use std::path::{Path, PathBuf};

use cryptoyield::amm::AmmError;
use cryptoyield::lending::LendingError;
use cryptoyield::optrates::OptRatesError;
use cryptoyield::oracle::OracleError;
use cryptoyield::perps::PerpsError;
use cryptoyield::portfolio::PortfolioError;
use cryptoyield::series::SeriesError;
use cryptoyield::staking::StakingError;
use cryptoyield::xccy::XccyError;
use cryptoyield::IngestError;
use thiserror::Error;

/// Exit code for malformed input, bad parameters or unwritable output.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for a computation that broke down on valid input.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Ingest { path: PathBuf, source: IngestError },
    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }

    pub fn file(path: &Path, message: impl Display) -> Self {
        CliError::File { path: path.to_path_buf(), message: message.to_string() }
    }

    pub fn ingest(path: &Path, source: IngestError) -> Self {
        CliError::Ingest { path: path.to_path_buf(), source }
    }

    pub fn input(message: impl Display) -> Self {
        CliError::Input(message.to_string())
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_errors!(AmmError, PerpsError, OptRatesError, SeriesError, XccyError);

impl From<StakingError> for CliError {
    fn from(e: StakingError) -> Self {
        match e {
            StakingError::Stats(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<LendingError> for CliError {
    fn from(e: LendingError) -> Self {
        match e {
            LendingError::BadRate { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NonFinite => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PortfolioError> for CliError {
    fn from(e: PortfolioError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

/// Rejects non-finite results that would otherwise be written as garbage.
pub fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Numeric(format!("{name} evaluated to {v}")))
    }
}
