//! Timestamped price observations, rate conventions and realized volatility.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{field_f64, field_timestamp, IngestError, Table};
use crate::stats;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Relative deviation of any interval from the mean interval that
/// [`realized_vol`] tolerates.
pub const SPACING_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("timestamps not strictly increasing at observation {0}")]
    NotIncreasing(usize),
    #[error("non-positive or non-finite price at observation {0}")]
    BadPrice(usize),
    #[error("interval {index} is {interval}s against a mean spacing of {mean}s")]
    NonUniformSpacing { index: usize, interval: f64, mean: f64 },
    #[error("days_per_year must be positive")]
    BadConvention,
}

/// One observation: UTC epoch seconds and a strictly positive price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub timestamp: i64,
    pub price: f64,
}

/// Strictly time-ordered, strictly positive price observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    observations: Vec<Observation>,
}

impl PriceSeries {
    pub fn new(observations: Vec<Observation>) -> Result<Self, SeriesError> {
        for (i, o) in observations.iter().enumerate() {
            if !(o.price.is_finite() && o.price > 0.0) {
                return Err(SeriesError::BadPrice(i));
            }
            if i > 0 && o.timestamp <= observations[i - 1].timestamp {
                return Err(SeriesError::NotIncreasing(i));
            }
        }
        Ok(Self { observations })
    }

    /// Builds a series at a fixed spacing starting from `start`.
    pub fn uniform(start: i64, step_seconds: i64, prices: &[f64]) -> Result<Self, SeriesError> {
        Self::new(
            prices
                .iter()
                .enumerate()
                .map(|(i, &price)| Observation { timestamp: start + step_seconds * i as i64, price })
                .collect(),
        )
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.price)
    }

    /// Reads `timestamp,price` CSV (epoch seconds or ISO-8601 UTC).
    pub fn from_csv<R: Read>(input: R) -> Result<Self, IngestError> {
        let mut obs = Vec::new();
        Table::open(input, &["timestamp", "price"])?.for_each(|line, f| {
            let timestamp = field_timestamp(line, "timestamp", f[0])?;
            let price = field_f64(line, "price", f[1])?;
            if price <= 0.0 {
                return Err(IngestError::new(line, "price must be positive"));
            }
            if let Some(prev) = obs.last().map(|o: &Observation| o.timestamp) {
                if timestamp <= prev {
                    return Err(IngestError::new(line, "timestamps must be strictly increasing"));
                }
            }
            obs.push(Observation { timestamp, price });
            Ok(())
        })?;
        Ok(Self { observations: obs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Compounding {
    #[default]
    Simple,
    Continuous,
}

/// Day count and compounding used to annualize rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConvention {
    pub days_per_year: f64,
    pub compounding: Compounding,
}

impl Default for RateConvention {
    fn default() -> Self {
        Self { days_per_year: 365.0, compounding: Compounding::Simple }
    }
}

impl RateConvention {
    pub fn new(days_per_year: f64, compounding: Compounding) -> Result<Self, SeriesError> {
        if !(days_per_year.is_finite() && days_per_year > 0.0) {
            return Err(SeriesError::BadConvention);
        }
        Ok(Self { days_per_year, compounding })
    }

    pub fn seconds_per_year(&self) -> f64 {
        self.days_per_year * SECONDS_PER_DAY
    }

    pub fn year_fraction(&self, seconds: f64) -> f64 {
        seconds / self.seconds_per_year()
    }

    /// Annualizes a rate earned over `period_days`.
    pub fn annualize(&self, period_rate: f64, period_days: f64) -> f64 {
        let per_year = self.days_per_year / period_days;
        match self.compounding {
            Compounding::Simple => period_rate * per_year,
            Compounding::Continuous => (1.0 + period_rate).ln() * per_year,
        }
    }
}

/// Trailing mean over `(t - window, t]` at each point of a time-sorted
/// series. Early points average whatever history is available.
pub fn trailing_mean(points: &[(i64, f64)], window_seconds: i64) -> Vec<f64> {
    let mut start = 0;
    points
        .iter()
        .enumerate()
        .map(|(i, &(t, _))| {
            while points[start].0 <= t - window_seconds {
                start += 1;
            }
            let window = &points[start..=i];
            window.iter().map(|p| p.1).sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// `ln(p[i+1] / p[i])` for each consecutive pair.
///
/// Evaluated as a difference of logs so that a path and its reversal produce
/// exactly negated returns.
pub fn log_returns(series: &PriceSeries) -> Result<Vec<f64>, SeriesError> {
    if series.len() < 2 {
        return Err(SeriesError::InsufficientData { needed: 2, got: series.len() });
    }
    Ok(series.observations.windows(2).map(|w| w[1].price.ln() - w[0].price.ln()).collect())
}

/// Annualized sample standard deviation of log returns.
///
/// Requires uniform spacing: every interval within [`SPACING_TOLERANCE`] of
/// the mean interval. The number of periods per year follows from the mean
/// interval and the convention's day count.
pub fn realized_vol(series: &PriceSeries, convention: &RateConvention) -> Result<f64, SeriesError> {
    if series.len() < 3 {
        return Err(SeriesError::InsufficientData { needed: 3, got: series.len() });
    }
    let obs = &series.observations;
    let span = (obs[obs.len() - 1].timestamp - obs[0].timestamp) as f64;
    let mean_dt = span / (obs.len() - 1) as f64;
    for (i, w) in obs.windows(2).enumerate() {
        let dt = (w[1].timestamp - w[0].timestamp) as f64;
        if ((dt - mean_dt) / mean_dt).abs() > SPACING_TOLERANCE {
            return Err(SeriesError::NonUniformSpacing { index: i, interval: dt, mean: mean_dt });
        }
    }
    let returns = log_returns(series)?;
    let sd = stats::sample_std(&returns).unwrap_or(0.0);
    let periods_per_year = convention.seconds_per_year() / mean_dt;
    Ok(sd * periods_per_year.sqrt())
}
