//! Over-collateralized loans valued as options on two assets.
//!
//! A borrower posts collateral worth `A` (token α) against a repayment worth
//! `B` (token β) due at `T`. Without liquidation the borrower ends up with
//! `Max[A_T, B_T]` and the lender with `Min[A_T, B_T]`; since
//! `Max[A, B] = B + Max[0, A - B]`, both legs follow from the value of the
//! exchange option `Max[0, A_T - B_T]`.
//!
//! Both tokens follow correlated geometric Brownian motions in the numeraire,
//! each carrying its own token rate `r_α`, `r_β` (numeraire-measure drifts
//! `-r_α`, `-r_β`). The exchange option is then
//!
//! ```text
//! e^{-r_α T} A N(d1) - e^{-r_β T} B N(d2)
//! d1 = (ln(A/B) + (r_β - r_α) T + σ² T / 2) / (σ √T),  d2 = d1 - σ √T
//! σ² = σ_α² - 2 ρ σ_α σ_β + σ_β²
//! ```
//!
//! Note the minus sign on the second term. Printed with a plus, the formula
//! fails the deterministic limit (at σ → 0 with A > B it would return A + B
//! rather than A - B) and disagrees with Monte Carlo; the minus sign is the
//! standard exchange-option result and is what [`crate::oracle`] confirms.
//! The rate differential is multiplied by `T` for the same reason.
//!
//! The European and American versions of this claim coincide (no early
//! exercise premium without dividends), so only the European value is
//! computed.

mod touch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::norm_cdf;

pub use touch::{one_touch_value, OneTouch};

/// Collateral posted per unit of debt at origination on major lending venues.
pub const DEFAULT_COLLATERALIZATION: f64 = 1.5;

/// Liquidation penalty charged by Compound.
pub const COMPOUND_PENALTY: f64 = 0.08;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LendingError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("volatility {0} must be finite and non-negative")]
    BadVol(f64),
    #[error("correlation {0} outside [-1, 1]")]
    BadCorrelation(f64),
    #[error("liquidation penalty {0} outside [0, 1]")]
    BadPenalty(f64),
    #[error("utilization {0} outside [0, 1]")]
    BadUtilization(f64),
    #[error("invalid utilization curve: {0}")]
    BadCurve(&'static str),
    #[error("haircut {0} outside (0, 1)")]
    BadHaircut(f64),
    #[error("chain length must be at least 1")]
    BadChain,
    #[error("discount rate {rate} too negative for drift {drift} and vol {sigma}")]
    BadRate { rate: f64, drift: f64, sigma: f64 },
}

/// Terms of a collateralized loan, all values in the numeraire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoanTerms {
    /// Present value `A` of the collateral (token α).
    pub collateral: f64,
    /// Value `B` of the token-β amount to be repaid at maturity.
    pub repayment: f64,
    pub sigma_alpha: f64,
    pub sigma_beta: f64,
    pub rho: f64,
    pub r_alpha: f64,
    pub r_beta: f64,
    /// Years.
    pub maturity: f64,
}

impl LoanTerms {
    pub fn validate(&self) -> Result<(), LendingError> {
        if !(self.collateral > 0.0 && self.collateral.is_finite()) {
            return Err(LendingError::NonPositive("collateral"));
        }
        if !(self.repayment > 0.0 && self.repayment.is_finite()) {
            return Err(LendingError::NonPositive("repayment"));
        }
        for s in [self.sigma_alpha, self.sigma_beta] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(LendingError::BadVol(s));
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(LendingError::BadCorrelation(self.rho));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(LendingError::NonPositive("maturity"));
        }
        Ok(())
    }

    /// Volatility of the ratio `A / B`.
    pub fn combined_vol(&self) -> f64 {
        let v = self.sigma_alpha * self.sigma_alpha - 2.0 * self.rho * self.sigma_alpha * self.sigma_beta
            + self.sigma_beta * self.sigma_beta;
        v.max(0.0).sqrt()
    }

    pub fn discounted_collateral(&self) -> f64 {
        (-self.r_alpha * self.maturity).exp() * self.collateral
    }

    pub fn discounted_repayment(&self) -> f64 {
        (-self.r_beta * self.maturity).exp() * self.repayment
    }

    /// Current collateralization ratio `A / B`.
    pub fn collateral_ratio(&self) -> f64 {
        self.collateral / self.repayment
    }
}

/// Intermediate quantities of the exchange-option formula. `d1`, `d2` are
/// infinite (signed) in the deterministic case `σ √T = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeBreakdown {
    pub sigma: f64,
    pub d1: f64,
    pub d2: f64,
    pub discount_alpha: f64,
    pub discount_beta: f64,
    pub value: f64,
}

pub fn margrabe_breakdown(terms: &LoanTerms) -> Result<ExchangeBreakdown, LendingError> {
    terms.validate()?;
    let t = terms.maturity;
    let sigma = terms.combined_vol();
    let fa = terms.discounted_collateral();
    let fb = terms.discounted_repayment();
    let sd = sigma * t.sqrt();
    let (d1, d2, value) = if sd == 0.0 {
        let itm = fa > fb;
        let d = if itm { f64::INFINITY } else { f64::NEG_INFINITY };
        (d, d, (fa - fb).max(0.0))
    } else {
        let d1 = ((terms.collateral / terms.repayment).ln() + (terms.r_beta - terms.r_alpha) * t + 0.5 * sd * sd) / sd;
        let d2 = d1 - sd;
        (d1, d2, (fa * norm_cdf(d1) - fb * norm_cdf(d2)).max(0.0))
    };
    Ok(ExchangeBreakdown {
        sigma,
        d1,
        d2,
        discount_alpha: (-terms.r_alpha * t).exp(),
        discount_beta: (-terms.r_beta * t).exp(),
        value,
    })
}

/// Value of `Max[0, A_T - B_T]`.
pub fn margrabe_exchange_value(terms: &LoanTerms) -> Result<f64, LendingError> {
    margrabe_breakdown(terms).map(|b| b.value)
}

/// Borrower and lender claims on a loan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoanValuation {
    /// Claim on `Max[A_T, B_T]`, less any liquidation penalty.
    pub borrower_value: f64,
    /// Claim on `Min[A_T, B_T]`, plus any liquidation penalty.
    pub lender_value: f64,
    pub exchange_option_value: f64,
    /// Value of the penalty transferred to the lender; zero without one.
    pub liquidation_value: f64,
}

/// `borrower = e^{-r_β T} B + exchange option`, lender gets the rest of the
/// discounted `A + B`.
pub fn loan_values(terms: &LoanTerms) -> Result<LoanValuation, LendingError> {
    let x = margrabe_exchange_value(terms)?;
    let fa = terms.discounted_collateral();
    let fb = terms.discounted_repayment();
    let borrower = fb + x;
    Ok(LoanValuation {
        borrower_value: borrower,
        lender_value: fa + fb - borrower,
        exchange_option_value: x,
        liquidation_value: 0.0,
    })
}

/// A loan whose repayment leg is a risky token and whose collateral is the
/// numeraire itself (or a perfectly tethered stable coin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumeraireLoan {
    /// Collateral `A`, in the numeraire.
    pub collateral: f64,
    pub repayment: f64,
    pub sigma_beta: f64,
    pub r_beta: f64,
    pub maturity: f64,
}

/// `e^{-r_β T} B + A N(d) - e^{-r_β T} B N(d - σ_β √T)` with
/// `d = (ln(A/B) + r_β T + σ_β² T / 2) / (σ_β √T)`: the borrower's claim on
/// `Max[A, B_T]` when `A` carries no risk.
pub fn numeraire_loan_value(loan: &NumeraireLoan) -> Result<f64, LendingError> {
    let terms = LoanTerms {
        collateral: loan.collateral,
        repayment: loan.repayment,
        sigma_alpha: 0.0,
        sigma_beta: loan.sigma_beta,
        rho: 0.0,
        r_alpha: 0.0,
        r_beta: loan.r_beta,
        maturity: loan.maturity,
    };
    terms.validate()?;
    let t = loan.maturity;
    let fb = terms.discounted_repayment();
    let sd = loan.sigma_beta * t.sqrt();
    if sd == 0.0 {
        return Ok(loan.collateral.max(fb));
    }
    let d = ((loan.collateral / loan.repayment).ln() + loan.r_beta * t + 0.5 * sd * sd) / sd;
    Ok(fb + (loan.collateral * norm_cdf(d) - fb * norm_cdf(d - sd)).max(0.0))
}

/// Liquidation trigger and penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiquidationSpec {
    /// Collateralization ratio `A/B` at which the loan is liquidated.
    pub barrier: f64,
    /// Fraction of the repayment notional paid to the lender on liquidation.
    pub penalty: f64,
}

impl LiquidationSpec {
    pub fn validate(&self) -> Result<(), LendingError> {
        if !(self.barrier > 0.0 && self.barrier.is_finite()) {
            return Err(LendingError::NonPositive("liquidation barrier"));
        }
        if !(0.0..=1.0).contains(&self.penalty) {
            return Err(LendingError::BadPenalty(self.penalty));
        }
        Ok(())
    }
}

/// The penalty as a one-touch claim on the collateral ratio `A/B`.
///
/// The penalty is a fixed fraction of the repayment notional, i.e. an amount
/// of token β. Measured with token β as numeraire, `A/B` drifts at
/// `r_β - r_α` and the payment is discounted at `r_β`, so its value is
/// `B` times a unit one-touch under those parameters. Continuous monitoring;
/// margins cannot be replenished after the trigger.
pub fn liquidation_touch(terms: &LoanTerms, liq: &LiquidationSpec) -> OneTouch {
    OneTouch {
        spot: terms.collateral_ratio(),
        barrier: liq.barrier,
        payout: liq.penalty * terms.repayment,
        sigma: terms.combined_vol(),
        drift: terms.r_beta - terms.r_alpha,
        rate: terms.r_beta,
        maturity: terms.maturity,
    }
}

/// Loan valuation with a one-touch liquidation penalty moved from the
/// borrower to the lender. This is an approximation: after the trigger the
/// loan is treated as continuing unchanged apart from the penalty.
pub fn loan_value_with_liquidation(terms: &LoanTerms, liq: &LiquidationSpec) -> Result<LoanValuation, LendingError> {
    liq.validate()?;
    let base = loan_values(terms)?;
    if liq.penalty == 0.0 {
        return Ok(base);
    }
    let penalty = one_touch_value(&liquidation_touch(terms, liq))?;
    Ok(LoanValuation {
        borrower_value: base.borrower_value - penalty,
        lender_value: base.lender_value + penalty,
        liquidation_value: penalty,
        ..base
    })
}

/// Kinked ("hockey stick") borrow-rate curve over pool utilization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationCurve {
    pub kink: f64,
    pub base_rate: f64,
    pub slope_low: f64,
    pub slope_high: f64,
}

impl Default for UtilizationCurve {
    fn default() -> Self {
        Self { kink: 0.80, base_rate: 0.0, slope_low: 0.04, slope_high: 0.75 }
    }
}

impl UtilizationCurve {
    pub fn validate(&self) -> Result<(), LendingError> {
        if !(self.kink > 0.0 && self.kink < 1.0) {
            return Err(LendingError::BadCurve("kink must lie in (0, 1)"));
        }
        if !(self.slope_low >= 0.0 && self.slope_high >= 0.0) {
            return Err(LendingError::BadCurve("slopes must be non-negative"));
        }
        if self.slope_high < self.slope_low {
            return Err(LendingError::BadCurve("slope above the kink must be the steeper one"));
        }
        Ok(())
    }
}

/// Annualized borrow rate at `utilization`.
pub fn utilization_rate(curve: &UtilizationCurve, utilization: f64) -> Result<f64, LendingError> {
    curve.validate()?;
    if !(0.0..=1.0).contains(&utilization) {
        return Err(LendingError::BadUtilization(utilization));
    }
    let low = curve.slope_low * utilization.min(curve.kink);
    let high = curve.slope_high * (utilization - curve.kink).max(0.0);
    Ok(curve.base_rate + low + high)
}

/// Exposure multiple from re-lending collateral `chain_length` times with a
/// haircut `x` each time: `sum_{i<n} (1-x)^i = (1 - (1-x)^n) / x`, which
/// stays below `1/x`.
pub fn recycling_leverage(haircut: f64, chain_length: u32) -> Result<f64, LendingError> {
    if !(haircut > 0.0 && haircut < 1.0) {
        return Err(LendingError::BadHaircut(haircut));
    }
    if chain_length == 0 {
        return Err(LendingError::BadChain);
    }
    let keep = 1.0 - haircut;
    if chain_length <= 100_000 {
        // Direct summation keeps small cases exact (n = 1 gives 1).
        let (mut sum, mut term) = (0.0, 1.0);
        for _ in 0..chain_length {
            sum += term;
            term *= keep;
        }
        return Ok(sum);
    }
    Ok(-(chain_length as f64 * keep.ln()).exp_m1() / haircut)
}

/// Supremum of [`recycling_leverage`] over chain lengths.
pub fn recycling_limit(haircut: f64) -> Result<f64, LendingError> {
    if !(haircut > 0.0 && haircut < 1.0) {
        return Err(LendingError::BadHaircut(haircut));
    }
    Ok(1.0 / haircut)
}
