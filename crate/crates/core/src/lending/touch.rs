use serde::{Deserialize, Serialize};

use super::LendingError;
use crate::stats::norm_cdf;

/// Down-and-in one-touch paying `payout` at the first time the underlying
/// reaches `barrier` from above, if that happens before `maturity`.
///
/// The underlying follows a GBM with arithmetic drift `drift` and volatility
/// `sigma`; payments are discounted at `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneTouch {
    pub spot: f64,
    pub barrier: f64,
    pub payout: f64,
    pub sigma: f64,
    pub drift: f64,
    pub rate: f64,
    pub maturity: f64,
}

impl OneTouch {
    fn validate(&self) -> Result<(), LendingError> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(LendingError::NonPositive("spot"));
        }
        if !(self.barrier > 0.0 && self.barrier.is_finite()) {
            return Err(LendingError::NonPositive("barrier"));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(LendingError::NonPositive("maturity"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(LendingError::BadVol(self.sigma));
        }
        if !self.payout.is_finite() || !self.drift.is_finite() || !self.rate.is_finite() {
            return Err(LendingError::NonPositive("finite inputs"));
        }
        Ok(())
    }
}

/// `e^a N(b)` without overflowing when `a` is large and `N(b)` tiny.
fn scaled_cdf(a: f64, b: f64) -> f64 {
    let n = norm_cdf(b);
    if n == 0.0 {
        0.0
    } else {
        (a + n.ln()).exp()
    }
}

/// Present value of a pay-at-hit one-touch.
///
/// With `x0 = ln(S/H)`, `ν = μ - σ²/2` and `γ = sqrt(ν² + 2rσ²)`, the
/// Laplace transform of the first-passage time gives
///
/// ```text
/// payout * [ e^{-x0 (ν+γ)/σ²} N((-x0 + γT)/(σ√T)) + e^{-x0 (ν-γ)/σ²} N((-x0 - γT)/(σ√T)) ]
/// ```
///
/// A spot at or below the barrier pays immediately.
pub fn one_touch_value(touch: &OneTouch) -> Result<f64, LendingError> {
    touch.validate()?;
    let OneTouch { spot, barrier, payout, sigma, drift, rate, maturity: t } = *touch;
    if spot <= barrier {
        return Ok(payout);
    }
    let x0 = (spot / barrier).ln();
    if sigma == 0.0 {
        // Deterministic path: hits only when drifting down fast enough.
        if drift >= 0.0 {
            return Ok(0.0);
        }
        let hit = x0 / -drift;
        return Ok(if hit <= t { payout * (-rate * hit).exp() } else { 0.0 });
    }
    let s2 = sigma * sigma;
    let nu = drift - 0.5 * s2;
    let disc = nu * nu + 2.0 * rate * s2;
    if disc < 0.0 {
        return Err(LendingError::BadRate { rate, drift, sigma });
    }
    let gamma = disc.sqrt();
    let sd = sigma * t.sqrt();
    let first = scaled_cdf(-x0 * (nu + gamma) / s2, (-x0 + gamma * t) / sd);
    let second = scaled_cdf(-x0 * (nu - gamma) / s2, (-x0 - gamma * t) / sd);
    Ok(payout * (first + second))
}
