use std::path::PathBuf;

use clap::Args;
use cryptoyield::optrates::{chain_rates, daily_series, read_option_chain_csv, rolling_average, OptionQuote};
use cryptoyield::series::Compounding;
use cryptoyield::{stats, RateConvention};
use serde::Serialize;

use super::{failures, num, ok, read_csv};
use crate::error::CliError;
use crate::report::{pct, Report};

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatesArgs {
    /// Option chain with columns `quote_time,expiry,strike,call,put,underlying`.
    #[arg(long)]
    pub input: PathBuf,
    /// Trailing windows, in days, for the rolling daily means.
    #[arg(long, value_delimiter = ',', default_value = "7,30")]
    pub window: Vec<u32>,
    #[arg(long, default_value_t = 365.0)]
    pub days_per_year: f64,
}

#[derive(Serialize)]
struct PointOut {
    quote_time: i64,
    expiry: i64,
    strike: f64,
    discount_factor: f64,
    rate_pct: f64,
}

#[derive(Serialize)]
struct RejectedOut {
    quote_time: i64,
    expiry: i64,
    strike: f64,
    call: f64,
    put: f64,
    underlying: f64,
    reason: String,
}

impl RatesArgs {
    fn load(&self) -> Result<Vec<OptionQuote>, CliError> {
        read_csv(&self.input, read_option_chain_csv)
    }

    fn check_params(&self) -> Result<RateConvention, CliError> {
        if self.window.contains(&0) {
            return Err(CliError::input("windows must be at least one day"));
        }
        Ok(RateConvention::new(self.days_per_year, Compounding::Continuous)?)
    }

    pub fn check(&self) -> Vec<CliError> {
        failures([ok(self.load()), ok(self.check_params())])
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        let conv = self.check_params()?;
        let chain = chain_rates(&self.load()?, &conv);
        let daily = daily_series(&chain);

        let points: Vec<PointOut> = chain
            .points
            .iter()
            .map(|p| PointOut {
                quote_time: p.quote_time,
                expiry: p.expiry,
                strike: p.strike,
                discount_factor: p.discount_factor,
                rate_pct: pct(p.rate),
            })
            .collect();
        let rejected: Vec<RejectedOut> = chain
            .rejected
            .iter()
            .map(|(q, e)| RejectedOut {
                quote_time: q.quote_time,
                expiry: q.expiry,
                strike: q.strike,
                call: q.call,
                put: q.put,
                underlying: q.underlying,
                reason: e.to_string(),
            })
            .collect();

        let mut header: Vec<String> = ["day", "mean_rate_pct", "points", "excluded"].map(String::from).into();
        let mut rolling = Vec::with_capacity(self.window.len());
        for &w in &self.window {
            header.push(format!("rolling_{w}d_pct"));
            rolling.push(rolling_average(&daily, w)?);
        }
        let table: Vec<Vec<String>> = daily
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut row =
                    vec![d.day.to_string(), num(pct(d.mean_rate)), d.points.to_string(), d.excluded.to_string()];
                row.extend(rolling.iter().map(|r| num(pct(r[i]))));
                row
            })
            .collect();

        let means: Vec<f64> = daily.iter().map(|d| d.mean_rate).collect();
        let mut report = Report::new();
        report
            .metric("quotes", chain.points.len() + chain.rejected.len())
            .metric("points", chain.points.len())
            .metric("rejected", chain.rejected.len())
            .metric("days", daily.len())
            .metric("mean_daily_rate_pct", stats::mean(&means).map(pct))
            .metric("last_daily_rate_pct", means.last().copied().map(pct));
        report.rows("points", &points)?;
        report.table("daily", &header, &table)?;
        report.rows("rejected", &rejected)?;
        Ok(report)
    }
}
