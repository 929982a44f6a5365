//! Constant-product market maker: pool state machine, liquidity provision,
//! swaps with fees, arbitrage alignment and impermanent gain/loss.
//!
//! Pools are single-writer state machines; distinct pools are independent.
//! Valuation helpers only read a pool.

mod pool;
mod scalar;
pub mod scenario;

use thiserror::Error;

pub use pool::{absolute_impermanent_pnl, LpPosition, Pool, SwapDirection, SwapReceipt, FEE_TIERS, RATIO_TOLERANCE};
pub use scalar::{ratio, Amount};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmmError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("fee {0} outside [0, 1)")]
    BadFee(f64),
    #[error("deposit ratio {deposit} does not match pool ratio {pool}")]
    RatioMismatch { deposit: f64, pool: f64 },
    #[error("cannot redeem {requested} shares from a supply of {supply}")]
    InsufficientShares { requested: f64, supply: f64 },
    #[error("pool has no liquidity left")]
    Dead,
    #[error("price ratio must be positive, got {0}")]
    BadRatio(f64),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("alpha and sigma must be non-negative")]
    BadYieldInput,
    #[error("event {index}: {source}")]
    Event {
        index: usize,
        #[source]
        source: Box<AmmError>,
    },
    #[error("unknown position `{0}`")]
    UnknownPosition(String),
}

/// Value of an LP position relative to holding, fees excluded, after the
/// exchange rate moves by `r = exit rate / entry rate`:
/// `2 sqrt(r) / (1 + r) - 1`.
pub fn impermanent_loss_relative(price_ratio: f64) -> Result<f64, AmmError> {
    if !(price_ratio.is_finite() && price_ratio > 0.0) {
        return Err(AmmError::BadRatio(price_ratio));
    }
    Ok(2.0 * price_ratio.sqrt() / (1.0 + price_ratio) - 1.0)
}

/// Average gain per unit time `(alpha T - sigma sqrt(T)) / T` of an LP
/// earning fees at rate `alpha` while bearing exchange-rate risk of size
/// `sigma sqrt(T)`; tends to `alpha` as `T` grows.
pub fn lp_longrun_yield(alpha: f64, sigma: f64, horizon: f64) -> Result<f64, AmmError> {
    if !(horizon > 0.0) {
        return Err(AmmError::BadHorizon(horizon));
    }
    if !(alpha >= 0.0 && sigma >= 0.0) {
        return Err(AmmError::BadYieldInput);
    }
    Ok((alpha * horizon - sigma * horizon.sqrt()) / horizon)
}
