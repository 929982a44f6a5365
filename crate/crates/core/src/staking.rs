//! Proof-of-stake validator returns, eligibility and slashing.
//!
//! A validator's return for the day ending at `t` is
//! `R = 365 (V_t / V_{t-1} - 1)`, where both balances are the 00:00 UTC
//! snapshots. A validator is eligible only if it stays `Active` over the
//! whole closed interval `[t-1, t]` and every available snapshot in that
//! interval holds at least [`MIN_BALANCE`].

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{field_f64, field_timestamp, IngestError, Table};
use crate::stats::{self, StatsError};

/// Minimum balance (ETH) a validator must hold throughout the period.
pub const MIN_BALANCE: f64 = 32.0;

/// Multiplier applied to the failed share of the network when slashing.
pub const SLASH_MULTIPLIER: f64 = 3.0;

const DAY: i64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StakingError {
    #[error("validator {id} is not eligible on {day}: {reason}")]
    Ineligible { id: String, day: NaiveDate, reason: String },
    #[error("validator {id} has no balance snapshot at {timestamp}")]
    MissingData { id: String, timestamp: i64 },
    #[error("no eligible validators on {0}")]
    EmptyCohort(NaiveDate),
    #[error("network fraction {0}% outside [0, 100]")]
    Domain(f64),
    #[error("invalid validator record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidatorState {
    Active,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSnapshot {
    pub timestamp: i64,
    pub balance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateInterval {
    pub from: i64,
    pub to: i64,
    pub state: ValidatorState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatorRecord {
    id: String,
    balances: Vec<BalanceSnapshot>,
    states: Vec<StateInterval>,
}

impl ValidatorRecord {
    pub fn new(
        id: impl Into<String>,
        balances: Vec<BalanceSnapshot>,
        states: Vec<StateInterval>,
    ) -> Result<Self, StakingError> {
        let id = id.into();
        for (i, b) in balances.iter().enumerate() {
            if !(b.balance.is_finite() && b.balance >= 0.0) {
                return Err(StakingError::InvalidRecord(format!("{id}: negative balance")));
            }
            if i > 0 && b.timestamp <= balances[i - 1].timestamp {
                return Err(StakingError::InvalidRecord(format!("{id}: balances not strictly increasing in time")));
            }
        }
        if states.iter().any(|s| s.to < s.from) {
            return Err(StakingError::InvalidRecord(format!("{id}: reversed state interval")));
        }
        Ok(Self { id, balances, states })
    }

    /// A validator that is Active over the whole span of its snapshots.
    pub fn always_active(id: impl Into<String>, balances: Vec<BalanceSnapshot>) -> Result<Self, StakingError> {
        let states = match (balances.first(), balances.last()) {
            (Some(a), Some(b)) => {
                vec![StateInterval { from: a.timestamp, to: b.timestamp, state: ValidatorState::Active }]
            }
            _ => Vec::new(),
        };
        Self::new(id, balances, states)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn balances(&self) -> &[BalanceSnapshot] {
        &self.balances
    }

    fn balance_at(&self, ts: i64) -> Option<f64> {
        self.balances.binary_search_by_key(&ts, |b| b.timestamp).ok().map(|i| self.balances[i].balance)
    }

    /// Whether Active intervals cover `[from, to]` without gaps. Time not
    /// covered by any interval counts as not Active.
    fn active_throughout(&self, from: i64, to: i64) -> bool {
        let mut active: Vec<(i64, i64)> =
            self.states.iter().filter(|s| s.state == ValidatorState::Active).map(|s| (s.from, s.to)).collect();
        active.sort_unstable();
        let mut covered_to = from;
        let mut started = false;
        for (a, b) in active {
            if !started {
                if a > from {
                    return false;
                }
                if b >= from {
                    started = true;
                    covered_to = b;
                }
            } else if a <= covered_to {
                covered_to = covered_to.max(b);
            } else {
                break;
            }
        }
        let any_other = self.states.iter().any(|s| s.state == ValidatorState::Other && s.from < to && s.to > from);
        started && covered_to >= to && !any_other
    }
}

/// Annualized return of one validator for a day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakingReturn {
    pub validator: String,
    pub date: NaiveDate,
    pub annualized_return: f64,
}

fn day_start(day: NaiveDate) -> i64 {
    day.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
}

/// `365 (V_t / V_{t-1} - 1)` for the 24h ending at 00:00 UTC on `day`.
pub fn daily_return(v: &ValidatorRecord, day: NaiveDate) -> Result<StakingReturn, StakingError> {
    let t = day_start(day);
    let t_prev = t - DAY;
    let prev = v.balance_at(t_prev).ok_or_else(|| StakingError::MissingData { id: v.id.clone(), timestamp: t_prev })?;
    let cur = v.balance_at(t).ok_or_else(|| StakingError::MissingData { id: v.id.clone(), timestamp: t })?;
    let ineligible = |reason: String| StakingError::Ineligible { id: v.id.clone(), day, reason };
    if !v.active_throughout(t_prev, t) {
        return Err(ineligible("not continuously Active".into()));
    }
    if let Some(low) =
        v.balances.iter().filter(|b| b.timestamp >= t_prev && b.timestamp <= t).find(|b| b.balance < MIN_BALANCE)
    {
        return Err(ineligible(format!("balance {} below {MIN_BALANCE} at {}", low.balance, low.timestamp)));
    }
    Ok(StakingReturn { validator: v.id.clone(), date: day, annualized_return: 365.0 * (cur / prev - 1.0) })
}

/// Percentage of stake lost when `network_fraction_pct` percent of the
/// network fails jointly: `min(3 N%, 100)`.
pub fn slash_cost(network_fraction_pct: f64) -> Result<f64, StakingError> {
    if !(0.0..=100.0).contains(&network_fraction_pct) {
        return Err(StakingError::Domain(network_fraction_pct));
    }
    Ok((SLASH_MULTIPLIER * network_fraction_pct).min(100.0))
}

/// Percentile bands of eligible validators' returns on one day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortBands {
    pub date: NaiveDate,
    pub eligible: usize,
    pub excluded: usize,
    /// `(level, annualized return)` in the order requested.
    pub bands: Vec<(f64, f64)>,
}

pub fn percentile_bands(
    validators: &[ValidatorRecord],
    day: NaiveDate,
    percentiles: &[f64],
) -> Result<CohortBands, StakingError> {
    let returns: Vec<f64> =
        validators.iter().filter_map(|v| daily_return(v, day).ok()).map(|r| r.annualized_return).collect();
    if returns.is_empty() {
        return Err(StakingError::EmptyCohort(day));
    }
    let values = stats::percentiles(&returns, percentiles)?;
    Ok(CohortBands {
        date: day,
        eligible: returns.len(),
        excluded: validators.len() - returns.len(),
        bands: percentiles.iter().copied().zip(values).collect(),
    })
}

/// Reads `validator_id,timestamp,balance,state` CSV, one row per snapshot.
///
/// Consecutive snapshots that are both `Active` make the interval between
/// them Active; any other pairing marks it `Other`.
pub fn read_validators_csv<R: Read>(input: R) -> Result<Vec<ValidatorRecord>, IngestError> {
    let mut rows: BTreeMap<String, Vec<(u64, i64, f64, ValidatorState)>> = BTreeMap::new();
    Table::open(input, &["validator_id", "timestamp", "balance", "state"])?.for_each(|line, f| {
        let ts = field_timestamp(line, "timestamp", f[1])?;
        let balance = field_f64(line, "balance", f[2])?;
        if balance < 0.0 {
            return Err(IngestError::new(line, "balance must be non-negative"));
        }
        let state = if f[3].eq_ignore_ascii_case("active") { ValidatorState::Active } else { ValidatorState::Other };
        rows.entry(f[0].to_string()).or_default().push((line, ts, balance, state));
        Ok(())
    })?;
    let mut out = Vec::with_capacity(rows.len());
    for (id, mut snaps) in rows {
        snaps.sort_by_key(|s| s.1);
        if let Some(w) = snaps.windows(2).find(|w| w[0].1 == w[1].1) {
            return Err(IngestError::new(w[1].0, format!("duplicate snapshot for {id}")));
        }
        let balances = snaps.iter().map(|s| BalanceSnapshot { timestamp: s.1, balance: s.2 }).collect();
        let states = snaps
            .windows(2)
            .map(|w| StateInterval {
                from: w[0].1,
                to: w[1].1,
                state: if w[0].3 == ValidatorState::Active && w[1].3 == ValidatorState::Active {
                    ValidatorState::Active
                } else {
                    ValidatorState::Other
                },
            })
            .collect();
        let line = snaps[0].0;
        out.push(ValidatorRecord::new(id, balances, states).map_err(|e| IngestError::new(line, e.to_string()))?);
    }
    Ok(out)
}

/// Every day for which at least one validator has snapshots at both ends.
pub fn candidate_days(validators: &[ValidatorRecord]) -> Vec<NaiveDate> {
    let mut days = std::collections::BTreeSet::new();
    for v in validators {
        for b in &v.balances {
            if b.timestamp % DAY == 0 && v.balance_at(b.timestamp - DAY).is_some() {
                if let Some(dt) = chrono::DateTime::from_timestamp(b.timestamp, 0) {
                    days.insert(dt.date_naive());
                }
            }
        }
    }
    days.into_iter().collect()
}
