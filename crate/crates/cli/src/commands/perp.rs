use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use cryptoyield::perps::{
    basis_rows, funding_schedule, read_basis_csv, read_mark_index_csv, BasisQuote, FundingSpec, FundingVariant,
    MarkIndexTick, DEFAULT_BAND, DEFAULT_INTEREST_RATE, DEFAULT_INTERVAL_HOURS,
};
use cryptoyield::series::{trailing_mean, Compounding, SECONDS_PER_DAY};
use cryptoyield::{stats, RateConvention};
use serde::Serialize;

use super::{failures, ok, read_csv};
use crate::error::CliError;
use crate::report::{pct, Report};

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerpCmd {
    /// Per-interval funding from mark and index prices.
    Funding(FundingArgs),
    /// Futures basis over the perpetual and the rate it implies.
    Basis(BasisArgs),
}

impl PerpCmd {
    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            PerpCmd::Funding(a) => vec![a.input.as_path()],
            PerpCmd::Basis(a) => vec![a.input.as_path()],
        }
    }

    pub fn check(&self) -> Vec<CliError> {
        match self {
            PerpCmd::Funding(a) => failures([ok(a.load()), ok(a.spec().validate().map_err(CliError::from))]),
            PerpCmd::Basis(a) => failures([ok(a.load()), a.check_window()]),
        }
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        match self {
            PerpCmd::Funding(a) => a.execute(),
            PerpCmd::Basis(a) => a.execute(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Interest minus dividend yield, independent of the premium.
    Shiller,
    /// Interest rate unless the premium is more than a band away from it.
    Bitmex,
    /// Premium shrunk toward zero by the band.
    Deribit,
}

impl From<Variant> for FundingVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Shiller => FundingVariant::Shiller,
            Variant::Bitmex => FundingVariant::BitMexClamp,
            Variant::Deribit => FundingVariant::DeribitDeadband,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FundingArgs {
    /// Ticks with columns `timestamp,mark,index`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Variant::Deribit)]
    pub variant: Variant,
    #[arg(long, default_value_t = DEFAULT_INTERVAL_HOURS)]
    pub interval_hours: f64,
    /// Half-width of the band, per interval.
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
    /// Per-interval interest rate.
    #[arg(long, default_value_t = DEFAULT_INTEREST_RATE, allow_hyphen_values = true)]
    pub interest_rate: f64,
    /// Per-interval dividend yield (Shiller only).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dividend_yield: f64,
    /// Notional of the long position whose cash flows are tracked.
    #[arg(long, default_value_t = 1.0)]
    pub notional: f64,
}

#[derive(Serialize)]
struct FundingOut {
    timestamp: i64,
    premium: f64,
    funding_rate: f64,
    funding_rate_pct: f64,
    annualized_pct: f64,
    interval_fraction: f64,
    cash_flow: f64,
    cumulative: f64,
}

impl FundingArgs {
    fn spec(&self) -> FundingSpec {
        FundingSpec {
            variant: self.variant.into(),
            interval_hours: self.interval_hours,
            band: self.band,
            interest_rate: self.interest_rate,
            dividend_yield: self.dividend_yield,
        }
    }

    fn load(&self) -> Result<Vec<MarkIndexTick>, CliError> {
        read_csv(&self.input, read_mark_index_csv)
    }

    fn execute(&self) -> Result<Report, CliError> {
        let spec = self.spec();
        spec.validate()?;
        let ticks = self.load()?;
        let schedule = funding_schedule(&spec, &ticks, self.notional)?;
        let per_year = 365.0 * 24.0 / spec.interval_hours;
        let rows: Vec<FundingOut> = schedule
            .iter()
            .map(|r| FundingOut {
                timestamp: r.timestamp,
                premium: r.premium,
                funding_rate: r.funding_rate,
                funding_rate_pct: pct(r.funding_rate),
                annualized_pct: pct(r.funding_rate * per_year),
                interval_fraction: r.interval_fraction,
                cash_flow: r.cash_flow,
                cumulative: r.cumulative,
            })
            .collect();
        let rates: Vec<f64> = rows.iter().map(|r| r.funding_rate_pct).collect();
        let mut report = Report::new();
        report
            .metric("spec", spec)
            .metric("ticks", rows.len())
            .metric("mean_funding_rate_pct", stats::mean(&rates))
            .metric("mean_annualized_pct", stats::mean(&rates).map(|m| m * per_year))
            .metric("median_funding_rate_pct", stats::percentile(&rates, 50.0).ok())
            .metric("p5_funding_rate_pct", stats::percentile(&rates, 5.0).ok())
            .metric("p95_funding_rate_pct", stats::percentile(&rates, 95.0).ok())
            .metric("total_cash_flow", rows.last().map_or(0.0, |r| r.cumulative));
        report.rows("funding", &rows)?;
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompoundingArg {
    Simple,
    Continuous,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BasisArgs {
    /// Quotes with columns `timestamp,perp,future,expiry`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = CompoundingArg::Simple)]
    pub compounding: CompoundingArg,
    /// Trailing window of the rolling implied rate, in days.
    #[arg(long, default_value_t = 7)]
    pub window_days: u32,
}

#[derive(Serialize)]
struct BasisOut {
    timestamp: i64,
    expiry: i64,
    tenor_years: f64,
    basis_pct: f64,
    implied_rate_pct: f64,
    rolling_implied_rate_pct: f64,
}

impl BasisArgs {
    fn load(&self) -> Result<Vec<BasisQuote>, CliError> {
        read_csv(&self.input, read_basis_csv)
    }

    fn check_window(&self) -> Result<(), CliError> {
        if self.window_days == 0 {
            return Err(CliError::input("window-days must be at least 1"));
        }
        Ok(())
    }

    fn execute(&self) -> Result<Report, CliError> {
        self.check_window()?;
        let compounding = match self.compounding {
            CompoundingArg::Simple => Compounding::Simple,
            CompoundingArg::Continuous => Compounding::Continuous,
        };
        let conv = RateConvention::new(365.0, compounding)?;
        let mut rows = basis_rows(&self.load()?, &conv)?;
        rows.sort_by_key(|r| (r.timestamp, r.expiry));
        let points: Vec<(i64, f64)> = rows.iter().map(|r| (r.timestamp, r.implied_rate)).collect();
        let rolling = trailing_mean(&points, self.window_days as i64 * SECONDS_PER_DAY as i64);
        let out: Vec<BasisOut> = rows
            .iter()
            .zip(rolling)
            .map(|(r, m)| BasisOut {
                timestamp: r.timestamp,
                expiry: r.expiry,
                tenor_years: r.tenor,
                basis_pct: pct(r.basis),
                implied_rate_pct: pct(r.implied_rate),
                rolling_implied_rate_pct: pct(m),
            })
            .collect();
        let implied: Vec<f64> = out.iter().map(|r| r.implied_rate_pct).collect();
        let mut report = Report::new();
        report
            .metric("quotes", out.len())
            .metric("convention", conv)
            .metric("window_days", self.window_days)
            .metric("mean_implied_rate_pct", stats::mean(&implied))
            .metric("median_implied_rate_pct", stats::percentile(&implied, 50.0).ok())
            .metric("last_rolling_implied_rate_pct", out.last().map(|r| r.rolling_implied_rate_pct));
        report.rows("basis", &out)?;
        Ok(report)
    }
}
