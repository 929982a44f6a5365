//! Quantitative toolkit for the yield-generating mechanisms of crypto finance.
//!
//! - [`amm`]: constant-product pools, liquidity provision, impermanent loss.
//! - [`lending`]: over-collateralized loans valued as exchange options, with
//!   a one-touch liquidation penalty and a kinked utilization rate curve.
//! - [`perps`]: perpetual-futures funding rules and futures basis.
//! - [`staking`]: validator returns, slashing and cohort percentile bands.
//! - [`optrates`]: interest rates implied by put-call parity.
//! - [`xccy`]: margined cross-currency swap state machine.
//! - [`oracle`]: Monte Carlo pricer used to check the closed forms.
//! - [`series`], [`portfolio`], [`stats`]: shared numerics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amm;
pub mod ingest;
pub mod lending;
pub mod optrates;
pub mod oracle;
pub mod perps;
pub mod portfolio;
pub mod series;
pub mod staking;
pub mod stats;
pub mod xccy;

pub use amm::{impermanent_loss_relative, lp_longrun_yield, Pool};
pub use ingest::IngestError;
pub use lending::{loan_values, margrabe_exchange_value, one_touch_value, LoanTerms, LoanValuation};
pub use oracle::{GbmSpec, McEstimate};
pub use portfolio::{kelly_weights, sharpe_ratio, ReturnStats};
pub use series::{log_returns, realized_vol, PriceSeries, RateConvention};
pub use stats::{norm_cdf, percentile};
