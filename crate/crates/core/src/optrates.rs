//! Interest rates implied by put-call parity on option chains.
//!
//! `C - P = S - K B` gives the discount factor `B = (S - C + P) / K` and the
//! continuously compounded rate `r = -ln B / (T - t)`. Rates are computed
//! expiry by expiry and strike by strike, averaged per UTC day without
//! weighting, then smoothed with a trailing calendar window.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{field_f64, field_timestamp, IngestError, Table};
use crate::series::{trailing_mean, RateConvention, SECONDS_PER_DAY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptRatesError {
    #[error("invalid quote: {0}")]
    BadQuote(&'static str),
    #[error("discount factor {0} is not positive")]
    NonPositiveDiscount(f64),
    #[error("expiry must be after the quote time")]
    Expired,
    #[error("no valid quotes on {0}")]
    EmptyDay(NaiveDate),
    #[error("window must be at least one day")]
    BadWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub quote_time: i64,
    pub expiry: i64,
    pub strike: f64,
    pub call: f64,
    pub put: f64,
    /// Price of the underlying (the perpetual).
    pub underlying: f64,
}

impl OptionQuote {
    pub fn validate(&self) -> Result<(), OptRatesError> {
        if !(self.strike > 0.0 && self.underlying > 0.0) {
            return Err(OptRatesError::BadQuote("strike and underlying must be positive"));
        }
        if !(self.call >= 0.0 && self.put >= 0.0) {
            return Err(OptRatesError::BadQuote("option prices must be non-negative"));
        }
        if self.expiry <= self.quote_time {
            return Err(OptRatesError::Expired);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpliedRatePoint {
    pub quote_time: i64,
    pub expiry: i64,
    pub strike: f64,
    pub discount_factor: f64,
    /// Annualized, continuously compounded.
    pub rate: f64,
}

/// `B = (S - C + P) / K`. Non-positive values signal an arbitrage-violating
/// or stale quote and are rejected.
pub fn implied_discount_factor(q: &OptionQuote) -> Result<f64, OptRatesError> {
    q.validate()?;
    let b = (q.underlying - q.call + q.put) / q.strike;
    if b > 0.0 {
        Ok(b)
    } else {
        Err(OptRatesError::NonPositiveDiscount(b))
    }
}

/// `-ln B / (T - t)` with `T - t` in years of the convention's day count.
pub fn implied_rate(
    discount_factor: f64,
    quote_time: i64,
    expiry: i64,
    convention: &RateConvention,
) -> Result<f64, OptRatesError> {
    if !(discount_factor > 0.0) {
        return Err(OptRatesError::NonPositiveDiscount(discount_factor));
    }
    if expiry <= quote_time {
        return Err(OptRatesError::Expired);
    }
    Ok(-discount_factor.ln() / convention.year_fraction((expiry - quote_time) as f64))
}

pub fn implied_point(q: &OptionQuote, convention: &RateConvention) -> Result<ImpliedRatePoint, OptRatesError> {
    let b = implied_discount_factor(q)?;
    Ok(ImpliedRatePoint {
        quote_time: q.quote_time,
        expiry: q.expiry,
        strike: q.strike,
        discount_factor: b,
        rate: implied_rate(b, q.quote_time, q.expiry, convention)?,
    })
}

pub fn utc_day(timestamp: i64) -> NaiveDate {
    DateTime::from_timestamp(timestamp, 0).map(|d| d.date_naive()).unwrap_or(NaiveDate::MIN)
}

/// Unweighted mean rate over the points quoted on `day`.
pub fn aggregate_daily(points: &[ImpliedRatePoint], day: NaiveDate) -> Result<f64, OptRatesError> {
    let rates: Vec<f64> = points.iter().filter(|p| utc_day(p.quote_time) == day).map(|p| p.rate).collect();
    if rates.is_empty() {
        return Err(OptRatesError::EmptyDay(day));
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailyRate {
    pub day: NaiveDate,
    pub mean_rate: f64,
    pub points: usize,
    /// Quotes on this day rejected by the parity filter.
    pub excluded: usize,
}

/// Implied points for a whole chain, with the rejected quotes kept aside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainRates {
    pub points: Vec<ImpliedRatePoint>,
    pub rejected: Vec<(OptionQuote, OptRatesError)>,
}

pub fn chain_rates(quotes: &[OptionQuote], convention: &RateConvention) -> ChainRates {
    let mut out = ChainRates::default();
    for q in quotes {
        match implied_point(q, convention) {
            Ok(p) => out.points.push(p),
            Err(e) => out.rejected.push((*q, e)),
        }
    }
    out
}

/// Daily means in date order. Days whose quotes were all rejected are
/// skipped (their exclusions are still visible in `rejected`).
pub fn daily_series(chain: &ChainRates) -> Vec<DailyRate> {
    let mut days: BTreeMap<NaiveDate, (f64, usize, usize)> = BTreeMap::new();
    for p in &chain.points {
        let e = days.entry(utc_day(p.quote_time)).or_default();
        e.0 += p.rate;
        e.1 += 1;
    }
    for (q, _) in &chain.rejected {
        days.entry(utc_day(q.quote_time)).or_default().2 += 1;
    }
    days.into_iter()
        .filter(|(_, (_, n, _))| *n > 0)
        .map(|(day, (sum, n, excluded))| DailyRate { day, mean_rate: sum / n as f64, points: n, excluded })
        .collect()
}

/// Trailing mean over the last `window_days` calendar days (inclusive).
pub fn rolling_average(daily: &[DailyRate], window_days: u32) -> Result<Vec<f64>, OptRatesError> {
    if window_days == 0 {
        return Err(OptRatesError::BadWindow);
    }
    let points: Vec<(i64, f64)> =
        daily.iter().map(|d| (d.day.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp(), d.mean_rate)).collect();
    Ok(trailing_mean(&points, window_days as i64 * SECONDS_PER_DAY as i64))
}

/// Reads `quote_time,expiry,strike,call,put,underlying`.
pub fn read_option_chain_csv<R: Read>(input: R) -> Result<Vec<OptionQuote>, IngestError> {
    let mut out = Vec::new();
    Table::open(input, &["quote_time", "expiry", "strike", "call", "put", "underlying"])?.for_each(|line, f| {
        let q = OptionQuote {
            quote_time: field_timestamp(line, "quote_time", f[0])?,
            expiry: field_timestamp(line, "expiry", f[1])?,
            strike: field_f64(line, "strike", f[2])?,
            call: field_f64(line, "call", f[3])?,
            put: field_f64(line, "put", f[4])?,
            underlying: field_f64(line, "underlying", f[5])?,
        };
        q.validate().map_err(|e| IngestError::new(line, e.to_string()))?;
        out.push(q);
        Ok(())
    })?;
    Ok(out)
}
