//! Perpetual-futures funding and futures basis.
//!
//! Funding rates are per-interval fractions. A positive rate means longs pay
//! shorts. Three rules are implemented:
//!
//! - Shiller: the settlement adds `d_t - r_t F_{t-1}` to the long side, i.e.
//!   longs pay `r_t - d_t / F_{t-1}` per unit of price.
//! - BitMex: `F = P + clamp(I - P, -band, band)`.
//! - Deribit: `max(band, p) + min(-band, p)`, zero inside the deadband.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{field_f64, field_timestamp, IngestError, Table};
use crate::series::{Compounding, RateConvention};

pub const DEFAULT_INTERVAL_HOURS: f64 = 8.0;
/// 0.05% per interval.
pub const DEFAULT_BAND: f64 = 0.0005;
/// BitMex's quoted interest rate component, 0.01% per interval.
pub const DEFAULT_INTEREST_RATE: f64 = 0.0001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerpsError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("band {0} must be finite and non-negative")]
    BadBand(f64),
    #[error("events out of order at index {0}")]
    Unordered(usize),
    #[error("basis {0} implies a non-positive futures price")]
    BadBasis(f64),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundingVariant {
    Shiller,
    #[serde(alias = "bitmex")]
    BitMexClamp,
    #[serde(alias = "deribit")]
    DeribitDeadband,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingSpec {
    pub variant: FundingVariant,
    pub interval_hours: f64,
    pub band: f64,
    /// Per-interval interest rate: `I` for BitMex, `r_t` for Shiller.
    pub interest_rate: f64,
    /// Per-interval `d_t / F_{t-1}` for Shiller; ignored otherwise.
    pub dividend_yield: f64,
}

impl FundingSpec {
    pub fn new(variant: FundingVariant) -> Self {
        Self {
            variant,
            interval_hours: DEFAULT_INTERVAL_HOURS,
            band: DEFAULT_BAND,
            interest_rate: DEFAULT_INTEREST_RATE,
            dividend_yield: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), PerpsError> {
        if !(self.interval_hours > 0.0 && self.interval_hours.is_finite()) {
            return Err(PerpsError::NonPositive("funding interval"));
        }
        if !(self.band >= 0.0 && self.band.is_finite()) {
            return Err(PerpsError::BadBand(self.band));
        }
        Ok(())
    }

    pub fn interval_seconds(&self) -> f64 {
        self.interval_hours * 3600.0
    }

    /// Per-interval funding rate for the given premium.
    pub fn rate(&self, premium: f64) -> f64 {
        match self.variant {
            FundingVariant::Shiller => self.interest_rate - self.dividend_yield,
            FundingVariant::BitMexClamp => bitmex_funding(premium, self.interest_rate, self.band),
            FundingVariant::DeribitDeadband => deadband_funding(premium, self.band),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkIndexPair {
    pub mark_price: f64,
    pub index_price: f64,
}

/// `d_t - r_t F_{t-1}`, the amount added to the long's settlement.
pub fn shiller_anchor(dividend: f64, rate: f64, prev_settlement: f64) -> Result<f64, PerpsError> {
    if !(prev_settlement > 0.0) {
        return Err(PerpsError::NonPositive("previous settlement price"));
    }
    Ok(dividend - rate * prev_settlement)
}

/// `(mark - index) / index`.
pub fn premium_rate(pair: &MarkIndexPair) -> Result<f64, PerpsError> {
    if !(pair.index_price > 0.0) {
        return Err(PerpsError::NonPositive("index price"));
    }
    if !(pair.mark_price > 0.0) {
        return Err(PerpsError::NonPositive("mark price"));
    }
    Ok((pair.mark_price - pair.index_price) / pair.index_price)
}

/// Deribit rule with the standard 0.05% deadband.
pub fn deribit_funding(premium: f64) -> f64 {
    deadband_funding(premium, DEFAULT_BAND)
}

pub fn deadband_funding(premium: f64, band: f64) -> f64 {
    band.max(premium) + (-band).min(premium)
}

/// `P + clamp(I - P, -band, band)`. Inside the band this is returned as `I`
/// itself rather than `P + (I - P)`, which can be an ulp away.
pub fn bitmex_funding(premium: f64, interest_rate: f64, band: f64) -> f64 {
    let gap = interest_rate - premium;
    if gap.abs() <= band {
        interest_rate
    } else {
        premium + band.copysign(gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payer {
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingEvent {
    pub time: i64,
    pub funding_rate: f64,
    pub payer: Payer,
    /// Paid by the long per unit notional: rate times the interval fraction.
    pub cash_flow: f64,
}

impl FundingEvent {
    pub fn new(time: i64, funding_rate: f64, interval_fraction: f64) -> Self {
        Self {
            time,
            funding_rate,
            payer: if funding_rate > 0.0 { Payer::Long } else { Payer::Short },
            cash_flow: funding_rate * interval_fraction,
        }
    }
}

/// Cumulative amount paid by a long of `notional` (negative: received).
pub fn funding_accrual(notional: f64, events: &[FundingEvent]) -> Result<f64, PerpsError> {
    if let Some(i) = events.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(PerpsError::Unordered(i + 1));
    }
    Ok(events.iter().map(|e| notional * e.cash_flow).sum())
}

/// One `timestamp,mark,index` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkIndexTick {
    pub timestamp: i64,
    pub pair: MarkIndexPair,
}

pub fn read_mark_index_csv<R: Read>(input: R) -> Result<Vec<MarkIndexTick>, IngestError> {
    let mut out: Vec<MarkIndexTick> = Vec::new();
    Table::open(input, &["timestamp", "mark", "index"])?.for_each(|line, f| {
        let timestamp = field_timestamp(line, "timestamp", f[0])?;
        let mark_price = field_f64(line, "mark", f[1])?;
        let index_price = field_f64(line, "index", f[2])?;
        if mark_price <= 0.0 || index_price <= 0.0 {
            return Err(IngestError::new(line, "mark and index must be positive"));
        }
        if out.last().is_some_and(|p| timestamp <= p.timestamp) {
            return Err(IngestError::new(line, "timestamps must be strictly increasing"));
        }
        out.push(MarkIndexTick { timestamp, pair: MarkIndexPair { mark_price, index_price } });
        Ok(())
    })?;
    Ok(out)
}

/// Funding row derived from one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundingRow {
    pub timestamp: i64,
    pub premium: f64,
    pub funding_rate: f64,
    /// Elapsed time since the previous tick in funding intervals; zero for
    /// the first tick, which only opens the accrual.
    pub interval_fraction: f64,
    pub cash_flow: f64,
    pub cumulative: f64,
}

/// Funding implied by each tick, accrued over the time since the previous
/// tick, for a long of `notional`.
pub fn funding_schedule(
    spec: &FundingSpec,
    ticks: &[MarkIndexTick],
    notional: f64,
) -> Result<Vec<FundingRow>, PerpsError> {
    spec.validate()?;
    let interval = spec.interval_seconds();
    let mut rows: Vec<FundingRow> = Vec::with_capacity(ticks.len());
    let mut cumulative = 0.0;
    for (i, tick) in ticks.iter().enumerate() {
        let premium = premium_rate(&tick.pair)?;
        let funding_rate = spec.rate(premium);
        let interval_fraction = match i {
            0 => 0.0,
            _ => {
                let dt = tick.timestamp - ticks[i - 1].timestamp;
                if dt < 0 {
                    return Err(PerpsError::Unordered(i));
                }
                dt as f64 / interval
            }
        };
        let cash_flow = notional * FundingEvent::new(tick.timestamp, funding_rate, interval_fraction).cash_flow;
        cumulative += cash_flow;
        rows.push(FundingRow {
            timestamp: tick.timestamp,
            premium,
            funding_rate,
            interval_fraction,
            cash_flow,
            cumulative,
        });
    }
    Ok(rows)
}

/// `(F - perp) / perp`.
pub fn futures_basis(future: f64, perp: f64) -> Result<f64, PerpsError> {
    if !(perp > 0.0) {
        return Err(PerpsError::NonPositive("perpetual price"));
    }
    Ok((future - perp) / perp)
}

/// Annualized rate implied by a basis over `tenor` years: `ln(1 + basis) / tenor`
/// under continuous compounding, `basis / tenor` under simple.
pub fn implied_rate_from_basis(basis: f64, tenor: f64, compounding: Compounding) -> Result<f64, PerpsError> {
    if !(tenor > 0.0) {
        return Err(PerpsError::NonPositive("tenor"));
    }
    if !(basis > -1.0) {
        return Err(PerpsError::BadBasis(basis));
    }
    Ok(match compounding {
        Compounding::Continuous => basis.ln_1p() / tenor,
        Compounding::Simple => basis / tenor,
    })
}

/// One `timestamp,perp,future,expiry` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisQuote {
    pub timestamp: i64,
    pub perp: f64,
    pub future: f64,
    pub expiry: i64,
}

pub fn read_basis_csv<R: Read>(input: R) -> Result<Vec<BasisQuote>, IngestError> {
    let mut out: Vec<BasisQuote> = Vec::new();
    Table::open(input, &["timestamp", "perp", "future", "expiry"])?.for_each(|line, f| {
        let q = BasisQuote {
            timestamp: field_timestamp(line, "timestamp", f[0])?,
            perp: field_f64(line, "perp", f[1])?,
            future: field_f64(line, "future", f[2])?,
            expiry: field_timestamp(line, "expiry", f[3])?,
        };
        if q.perp <= 0.0 || q.future <= 0.0 {
            return Err(IngestError::new(line, "prices must be positive"));
        }
        if q.expiry <= q.timestamp {
            return Err(IngestError::new(line, "expiry must be after the quote time"));
        }
        if out.last().is_some_and(|p| q.timestamp < p.timestamp) {
            return Err(IngestError::new(line, "timestamps must be non-decreasing"));
        }
        out.push(q);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisRow {
    pub timestamp: i64,
    pub expiry: i64,
    pub tenor: f64,
    pub basis: f64,
    pub implied_rate: f64,
}

pub fn basis_rows(quotes: &[BasisQuote], convention: &RateConvention) -> Result<Vec<BasisRow>, PerpsError> {
    quotes
        .iter()
        .map(|q| {
            let tenor = convention.year_fraction((q.expiry - q.timestamp) as f64);
            let basis = futures_basis(q.future, q.perp)?;
            Ok(BasisRow {
                timestamp: q.timestamp,
                expiry: q.expiry,
                tenor,
                basis,
                implied_rate: implied_rate_from_basis(basis, tenor, convention.compounding)?,
            })
        })
        .collect()
}
