//! Margined cross-currency swap between two parties on a shared contract.
//!
//! Party A starts with token α and party B with token β, exchange rate `X`
//! quoted in β per α. At initiation A pays `notional_a` α to B, B pays
//! `notional_b = notional_a X0` β to A, and each side locks a margin in the
//! token of the notional it posted. At maturity the notionals are swapped
//! back at the agreed final rate (by default `X0`).
//!
//! The reversal leaves A long α against β: its mark-to-market is
//! `notional_a (X_t - X_final)` β, and B's is the negative. The side with an
//! adverse mark has it charged against its margin (A's converted to α at
//! `X_t`). If the residual margin falls below `threshold` times the initial
//! margin and is not topped up in the same step, the swap terminates: the
//! other side takes its mark from the breaching margin (capped at the margin,
//! any excess reported as uncollateralized), margins are released, and both
//! keep the exchanged notionals.
//!
//! All token amounts are exact rationals, so conservation holds exactly.

mod agreement;
mod ledger;
pub mod scenario;

use num::rational::BigRational;
use num::{BigInt, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lending::{recycling_leverage, recycling_limit, LendingError};

pub use agreement::{
    HistoryEntry, LegFlow, LegRate, LegSpec, Marks, Period, Settlement, SettlementKind, Swap, SwapAgreement, SwapState,
    ThresholdBase, TickOutcome,
};
pub use ledger::{Account, AuditEntry, Ledger, Wallets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }

    /// Token of the party's posted notional, margin and fees.
    pub fn home_token(self) -> Token {
        match self {
            Party::A => Token::Alpha,
            Party::B => Token::Beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Token {
    Alpha,
    Beta,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XccyError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} is not a finite decimal")]
    NotFinite(&'static str),
    #[error("threshold {0} outside [0, 1)")]
    BadThreshold(f64),
    #[error("notional_b {notional_b} differs from notional_a * X0 = {implied}")]
    NotionalMismatch { notional_b: f64, implied: f64 },
    #[error("maturity must be after the start")]
    BadSchedule,
    #[error("margin of party {0:?} is below the sizing rule")]
    UndersizedMargin(Party),
    #[error("operation `{op}` not allowed in state {state}")]
    InvalidState { op: &'static str, state: String },
    #[error("tick at {time} is not after the previous tick at {previous}")]
    StaleTick { time: i64, previous: i64 },
    #[error("swap matures at {maturity}, cannot mature at {time}")]
    NotMatured { time: i64, maturity: i64 },
    #[error("no fixing for floating index `{0}`")]
    MissingFixing(String),
    #[error("{account:?} holds {available} of {token:?}, needs {needed}")]
    InsufficientFunds { account: Account, token: Token, needed: String, available: String },
    #[error("event {index}: {source}")]
    Event { index: usize, source: Box<XccyError> },
    #[error(transparent)]
    Lending(#[from] LendingError),
}

/// Exact rational with the same decimal digits as `v`'s shortest
/// round-trip representation, so `0.04` becomes `1/25` rather than the
/// nearest binary fraction.
pub fn exact_decimal(v: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let text = format!("{v}");
    let (neg, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int}{frac}").parse().ok()?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(numer, denom);
    Some(if neg { -r } else { r })
}

pub(crate) fn positive(v: f64, name: &'static str) -> Result<BigRational, XccyError> {
    let r = exact_decimal(v).ok_or(XccyError::NotFinite(name))?;
    if r > BigRational::zero() {
        Ok(r)
    } else {
        Err(XccyError::NonPositive(name))
    }
}

/// Margin fraction `c σ √T`, capped at 1: a buffer growing with the square
/// root of the swap's life.
pub fn buffer_size(sigma: f64, duration: f64, multiplier: f64) -> Result<f64, XccyError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(XccyError::NonPositive("volatility (or zero)"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(XccyError::NonPositive("duration"));
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(XccyError::NonPositive("multiplier"));
    }
    Ok((multiplier * sigma * duration.sqrt()).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeverageBound {
    /// `1 / x`, approached but never reached.
    pub supremum: f64,
    /// Leverage after `chain_length` rounds of re-posting the notional.
    pub achievable: f64,
    pub chain_length: u32,
}

/// Leverage from recycling the received notional as margin elsewhere.
pub fn max_leverage(margin_fraction: f64, chain_length: u32) -> Result<LeverageBound, XccyError> {
    Ok(LeverageBound {
        supremum: recycling_limit(margin_fraction)?,
        achievable: recycling_leverage(margin_fraction, chain_length)?,
        chain_length,
    })
}
