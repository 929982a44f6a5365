//! Sharpe ratios and log-optimal (Kelly) allocation across return streams.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{log_returns, PriceSeries, RateConvention, SeriesError};
use crate::stats;

/// Largest covariance condition number accepted by [`kelly_weights`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PortfolioError {
    #[error("volatility is zero; ratio undefined")]
    ZeroVol,
    #[error("negative or non-finite volatility")]
    BadVol,
    #[error("dimension mismatch: {means} means against a {rows}x{cols} covariance")]
    Dimension { means: usize, rows: usize, cols: usize },
    #[error("covariance is not symmetric")]
    NotSymmetric,
    #[error("covariance is not positive definite (smallest eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("covariance is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl PortfolioError {
    /// True for failures of the numerics rather than of the inputs' shape.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Self::NotPositiveDefinite(_) | Self::IllConditioned(_) | Self::ZeroVol)
    }
}

/// Per-period mean and standard deviation of returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub mean: f64,
    pub vol: f64,
    pub periods_per_year: f64,
}

impl ReturnStats {
    pub fn new(mean: f64, vol: f64, periods_per_year: f64) -> Result<Self, PortfolioError> {
        if !(vol.is_finite() && vol >= 0.0) {
            return Err(PortfolioError::BadVol);
        }
        Ok(Self { mean, vol, periods_per_year })
    }

    /// Log-return statistics of a price series, with the period length taken
    /// from the mean observation spacing.
    pub fn from_series(series: &PriceSeries, convention: &RateConvention) -> Result<Self, PortfolioError> {
        let r = log_returns(series)?;
        if r.len() < 2 {
            return Err(SeriesError::InsufficientData { needed: 3, got: series.len() }.into());
        }
        let obs = series.observations();
        let span = (obs[obs.len() - 1].timestamp - obs[0].timestamp) as f64;
        let dt = span / r.len() as f64;
        Self::new(
            stats::mean(&r).unwrap_or(0.0),
            stats::sample_std(&r).unwrap_or(0.0),
            convention.seconds_per_year() / dt,
        )
    }

    pub fn annual_mean(&self) -> f64 {
        self.mean * self.periods_per_year
    }

    pub fn annual_vol(&self) -> f64 {
        self.vol * self.periods_per_year.sqrt()
    }
}

/// `(annualized mean - riskless) / annualized vol`.
pub fn sharpe_ratio(stats: &ReturnStats, riskless_rate: f64) -> Result<f64, PortfolioError> {
    if stats.vol == 0.0 {
        return Err(PortfolioError::ZeroVol);
    }
    Ok((stats.annual_mean() - riskless_rate) / stats.annual_vol())
}

/// Log-optimal allocation `w = Σ⁻¹ (μ - r·1)` for lognormal assets.
///
/// Weights are not normalized; a sum above one is leverage. The covariance
/// must be symmetric positive definite with condition number at most
/// [`MAX_CONDITION`]; the system is then solved by LU with partial pivoting.
pub fn kelly_weights(means: &[f64], riskless_rate: f64, covariance: &[Vec<f64>]) -> Result<Vec<f64>, PortfolioError> {
    let n = means.len();
    let rows = covariance.len();
    let cols = covariance.first().map_or(0, Vec::len);
    if n == 0 || rows != n || covariance.iter().any(|row| row.len() != n) {
        return Err(PortfolioError::Dimension { means: n, rows, cols });
    }
    let sigma = DMatrix::from_fn(n, n, |i, j| covariance[i][j]);
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                return Err(PortfolioError::NotSymmetric);
            }
        }
    }
    let eig = sigma.clone().symmetric_eigen().eigenvalues;
    let lo = eig.min();
    let hi = eig.max();
    if !(lo > 0.0) {
        return Err(PortfolioError::NotPositiveDefinite(lo));
    }
    let cond = hi / lo;
    if cond > MAX_CONDITION {
        return Err(PortfolioError::IllConditioned(cond));
    }
    let excess = DVector::from_iterator(n, means.iter().map(|m| m - riskless_rate));
    let w = sigma.lu().solve(&excess).ok_or(PortfolioError::IllConditioned(f64::INFINITY))?;
    Ok(w.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sharpe_examples() {
        let s = ReturnStats::new(0.10, 0.20, 1.0).unwrap();
        assert!((sharpe_ratio(&s, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sharpe_ratio(&s, 0.10).unwrap(), 0.0);
        let flat = ReturnStats::new(0.1, 0.0, 1.0).unwrap();
        assert_eq!(sharpe_ratio(&flat, 0.0), Err(PortfolioError::ZeroVol));
        // Daily stats annualize with 365 periods.
        let d = ReturnStats::new(0.1 / 365.0, 0.2 / 365f64.sqrt(), 365.0).unwrap();
        assert!((sharpe_ratio(&d, 0.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kelly_examples() {
        assert_eq!(kelly_weights(&[0.10], 0.0, &[vec![0.04]]).unwrap(), vec![2.5]);
        assert_eq!(kelly_weights(&[0.03, 0.03], 0.03, &[vec![0.04, 0.01], vec![0.01, 0.09]]).unwrap(), vec![0.0, 0.0]);
        let w = kelly_weights(&[0.1, 0.1], 0.0, &[vec![0.04, 0.0], vec![0.0, 0.04]]).unwrap();
        assert_eq!(w[0], w[1]);
    }

    #[test]
    fn kelly_rejects_bad_covariance() {
        assert!(matches!(
            kelly_weights(&[0.1, 0.1], 0.0, &[vec![1.0, 1.0], vec![1.0, 1.0]]),
            Err(PortfolioError::NotPositiveDefinite(_)) | Err(PortfolioError::IllConditioned(_))
        ));
        assert!(matches!(
            kelly_weights(&[0.1, 0.1], 0.0, &[vec![1.0, 0.0], vec![0.0, 1e-13]]),
            Err(PortfolioError::IllConditioned(_))
        ));
        assert!(matches!(
            kelly_weights(&[0.1, 0.1], 0.0, &[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(PortfolioError::NotPositiveDefinite(_))
        ));
        assert_eq!(
            kelly_weights(&[0.1, 0.1], 0.0, &[vec![1.0, 0.5], vec![0.4, 1.0]]),
            Err(PortfolioError::NotSymmetric)
        );
        assert!(matches!(
            kelly_weights(&[0.1], 0.0, &[vec![1.0, 0.0], vec![0.0, 1.0]]),
            Err(PortfolioError::Dimension { .. })
        ));
    }

    #[test]
    fn stats_from_series() {
        let s = PriceSeries::uniform(0, 86_400, &[100.0, 110.0, 121.0]).unwrap();
        let st = ReturnStats::from_series(&s, &RateConvention::default()).unwrap();
        assert!((st.mean - 1.1f64.ln()).abs() < 1e-14);
        assert!(st.vol < 1e-14);
        assert!((st.periods_per_year - 365.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn kelly_linear_in_excess_return(
            m in prop::collection::vec(-0.5f64..0.5, 3),
            a in prop::collection::vec(-1.0f64..1.0, 9),
            r in -0.05f64..0.05,
        ) {
            // Σ = A Aᵀ + I is SPD and well conditioned.
            let mut cov = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] = (0..3).map(|k| a[3 * i + k] * a[3 * j + k]).sum::<f64>()
                        + if i == j { 1.0 } else { 0.0 };
                }
            }
            let w1 = kelly_weights(&m, r, &cov).unwrap();
            let doubled: Vec<f64> = m.iter().map(|mi| r + 2.0 * (mi - r)).collect();
            let w2 = kelly_weights(&doubled, r, &cov).unwrap();
            for (x, y) in w1.iter().zip(&w2) {
                prop_assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
