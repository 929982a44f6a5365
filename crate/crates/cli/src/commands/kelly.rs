use std::path::PathBuf;

use clap::Args;
use cryptoyield::series::SeriesError;
use cryptoyield::{kelly_weights, log_returns, sharpe_ratio, PriceSeries, RateConvention, ReturnStats};
use serde::Serialize;

use super::{failures, ok, read_csv};
use crate::error::CliError;
use crate::report::Report;

#[derive(Debug, Clone, Args, Serialize)]
pub struct KellyArgs {
    /// Annualized expected returns, one per asset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "prices")]
    pub mean: Vec<f64>,
    /// Annualized volatilities; the assets are then taken as uncorrelated.
    #[arg(long, value_delimiter = ',', conflicts_with = "cov")]
    pub vol: Vec<f64>,
    /// Annualized covariance, rows separated by `;`, e.g. `0.04,0;0,0.09`.
    #[arg(long, allow_hyphen_values = true)]
    pub cov: Option<String>,
    /// Price histories `timestamp,price`, one file per asset, to estimate
    /// means and covariance from.
    #[arg(long)]
    pub prices: Vec<PathBuf>,
    /// Annualized riskless rate.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub riskless: f64,
}

#[derive(Serialize)]
struct AssetRow {
    asset: String,
    mean: f64,
    vol: f64,
    sharpe: f64,
    weight: f64,
}

struct Inputs {
    names: Vec<String>,
    means: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

fn parse_cov(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::input(format!("--cov: `{}` is not a number", v.trim())))
                })
                .collect()
        })
        .collect()
}

fn diagonal(vols: &[f64]) -> Vec<Vec<f64>> {
    let n = vols.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { vols[i] * vols[i] } else { 0.0 }).collect()).collect()
}

impl KellyArgs {
    fn load(&self) -> Result<Inputs, CliError> {
        if self.prices.is_empty() {
            if self.mean.is_empty() {
                return Err(CliError::input("give --mean with --vol or --cov, or --prices"));
            }
            let cov = match (&self.cov, self.vol.is_empty()) {
                (Some(c), _) => parse_cov(c)?,
                (None, false) => diagonal(&self.vol),
                (None, true) => return Err(CliError::input("--mean needs --vol or --cov")),
            };
            return Ok(Inputs {
                names: (1..=self.mean.len()).map(|i| format!("asset{i}")).collect(),
                means: self.mean.clone(),
                cov,
            });
        }

        let conv = RateConvention::default();
        let mut returns = Vec::new();
        let mut stamps = Vec::new();
        let mut per_year = Vec::new();
        for p in &self.prices {
            let s = read_csv(p, PriceSeries::from_csv)?;
            let stats = ReturnStats::from_series(&s, &conv).map_err(|e| CliError::file(p, e))?;
            returns.push(log_returns(&s)?);
            stamps.push(s.observations().iter().map(|o| o.timestamp).collect::<Vec<_>>());
            per_year.push(stats.periods_per_year);
        }
        let cov = match &self.cov {
            Some(c) => parse_cov(c)?,
            None => {
                if stamps.iter().any(|t| *t != stamps[0]) {
                    return Err(CliError::input(
                        "price files have different timestamps; pass --cov to supply the covariance",
                    ));
                }
                sample_cov(&returns, per_year[0])?
            }
        };
        // Drift of the price, not of its logarithm.
        let means = returns
            .iter()
            .zip(&per_year)
            .enumerate()
            .map(|(i, (r, k))| {
                r.iter().sum::<f64>() / r.len() as f64 * k
                    + 0.5 * cov.get(i).and_then(|row| row.get(i)).copied().unwrap_or(0.0)
            })
            .collect();
        Ok(Inputs { names: self.prices.iter().map(|p| p.display().to_string()).collect(), means, cov })
    }

    pub fn check(&self) -> Vec<CliError> {
        failures([ok(self.load())])
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        let inputs = self.load()?;
        let weights = kelly_weights(&inputs.means, self.riskless, &inputs.cov)?;
        let n = weights.len();
        let excess: Vec<f64> = inputs.means.iter().map(|m| m - self.riskless).collect();
        let quad: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| weights[i] * inputs.cov[i][j] * weights[j])
            .sum();
        let growth = self.riskless + weights.iter().zip(&excess).map(|(w, e)| w * e).sum::<f64>() - 0.5 * quad;

        let rows = (0..n)
            .map(|i| {
                let vol = inputs.cov[i][i].max(0.0).sqrt();
                let stats = ReturnStats::new(inputs.means[i], vol, 1.0)?;
                Ok(AssetRow {
                    asset: inputs.names[i].clone(),
                    mean: inputs.means[i],
                    vol,
                    sharpe: sharpe_ratio(&stats, self.riskless)?,
                    weight: weights[i],
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;

        let mut report = Report::new();
        report
            .metric("riskless", self.riskless)
            .metric("weights", &weights)
            .metric("gross_exposure", weights.iter().map(|w| w.abs()).sum::<f64>())
            .metric("net_exposure", weights.iter().sum::<f64>())
            .metric("growth_rate", growth)
            .metric("sharpe", rows.iter().map(|r| r.sharpe).collect::<Vec<_>>());
        report.rows("assets", &rows)?;
        Ok(report)
    }
}

/// Annualized sample covariance of equally long return series.
fn sample_cov(returns: &[Vec<f64>], periods_per_year: f64) -> Result<Vec<Vec<f64>>, CliError> {
    let len = returns[0].len();
    if len < 2 {
        return Err(SeriesError::InsufficientData { needed: 3, got: len + 1 }.into());
    }
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / len as f64).collect();
    Ok((0..returns.len())
        .map(|i| {
            (0..returns.len())
                .map(|j| {
                    let s: f64 = (0..len).map(|k| (returns[i][k] - means[i]) * (returns[j][k] - means[j])).sum();
                    s / (len - 1) as f64 * periods_per_year
                })
                .collect()
        })
        .collect())
}
