use std::path::{Path, PathBuf};

use clap::Args;
use cryptoyield::amm::scenario::{run_scenario, PoolScenario};
use cryptoyield::{impermanent_loss_relative, lp_longrun_yield, PriceSeries};
use serde::Serialize;

use super::{failures, ok, read_csv, read_document};
use crate::error::{finite, CliError};
use crate::report::{pct, Report};

#[derive(Debug, Clone, Args, Serialize)]
pub struct AmmArgs {
    /// Pool scenario (TOML, or JSON by extension) to replay.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Price history `timestamp,price` of x in y; emits the impermanent
    /// loss of a position opened at the first observation.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Smallest price ratio on the impermanent-loss curve.
    #[arg(long, default_value_t = 0.1)]
    pub il_min: f64,
    /// Largest price ratio on the impermanent-loss curve.
    #[arg(long, default_value_t = 10.0)]
    pub il_max: f64,
    /// Points on the curve, spaced evenly in log ratio.
    #[arg(long, default_value_t = 101)]
    pub il_points: usize,
    /// Fee yield per unit time; with --sigma emits the long-run yield curve.
    #[arg(long, requires = "sigma")]
    pub alpha: Option<f64>,
    /// Exchange-rate volatility per square-root unit time.
    #[arg(long, requires = "alpha")]
    pub sigma: Option<f64>,
}

#[derive(Serialize)]
struct IlPoint {
    price_ratio: f64,
    il_pct: f64,
}

#[derive(Serialize)]
struct IlObservation {
    timestamp: i64,
    price: f64,
    price_ratio: f64,
    il_pct: f64,
}

#[derive(Serialize)]
struct YieldPoint {
    horizon: f64,
    yield_pct: f64,
    gap_to_fee_yield_pct: f64,
}

impl AmmArgs {
    pub fn inputs(&self) -> Vec<&Path> {
        self.scenario.iter().chain(&self.prices).map(PathBuf::as_path).collect()
    }

    fn check_grid(&self) -> Result<(), CliError> {
        if !(self.il_min > 0.0 && self.il_max > self.il_min && self.il_max.is_finite()) {
            return Err(CliError::input("need 0 < il-min < il-max"));
        }
        if self.il_points < 2 {
            return Err(CliError::input("il-points must be at least 2"));
        }
        if let (Some(a), Some(s)) = (self.alpha, self.sigma) {
            lp_longrun_yield(a, s, 1.0)?;
        }
        Ok(())
    }

    fn load_scenario(&self) -> Result<Option<PoolScenario>, CliError> {
        self.scenario.as_deref().map(read_document).transpose()
    }

    fn load_prices(&self) -> Result<Option<PriceSeries>, CliError> {
        self.prices.as_deref().map(|p| read_csv(p, PriceSeries::from_csv)).transpose()
    }

    pub fn check(&self) -> Vec<CliError> {
        failures([ok(self.load_scenario()), ok(self.load_prices()), self.check_grid()])
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        self.check_grid()?;
        let mut report = Report::new();

        if let Some(sc) = self.load_scenario()? {
            let run = run_scenario(&sc)?;
            let pool = &run.pool;
            let (fx, fy) = pool.cumulative_fees();
            report
                .metric("events", sc.events.len())
                .metric("reserve_x", *pool.reserve_x())
                .metric("reserve_y", *pool.reserve_y())
                .metric("spot_price", pool.spot_price())
                .metric("total_shares", *pool.total_shares())
                .metric("cumulative_fees_x", *fx)
                .metric("cumulative_fees_y", *fy);
            report.rows("states", &run.states)?;
            report.rows("positions", &run.positions)?;
        }

        let (lo, hi) = (self.il_min.ln(), self.il_max.ln());
        let steps = (self.il_points - 1) as f64;
        let curve = (0..self.il_points)
            .map(|i| {
                let r = (lo + (hi - lo) * i as f64 / steps).exp();
                Ok(IlPoint { price_ratio: r, il_pct: pct(impermanent_loss_relative(r)?) })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        report.metric("il_at_double_pct", pct(impermanent_loss_relative(2.0)?));
        report.rows("il_curve", &curve)?;

        if let Some(series) = self.load_prices()? {
            let obs = series.observations();
            let Some(p0) = obs.first().map(|o| o.price) else {
                return Err(CliError::file(self.prices.as_deref().unwrap_or(Path::new("")), "no observations"));
            };
            let rows = obs
                .iter()
                .map(|o| {
                    let r = o.price / p0;
                    Ok(IlObservation {
                        timestamp: o.timestamp,
                        price: o.price,
                        price_ratio: r,
                        il_pct: pct(impermanent_loss_relative(r)?),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let worst = rows.iter().map(|r| r.il_pct).fold(0.0, f64::min);
            report.metric("il_series_worst_pct", worst);
            report.metric("il_series_final_pct", rows.last().map(|r| r.il_pct));
            report.rows("il_series", &rows)?;
        }

        if let (Some(alpha), Some(sigma)) = (self.alpha, self.sigma) {
            // Four points per decade from 0.01 to 1e6.
            let rows = (-8..=24)
                .map(|k| {
                    let t = 10f64.powf(k as f64 / 4.0);
                    let y = finite("long-run yield", lp_longrun_yield(alpha, sigma, t)?)?;
                    Ok(YieldPoint { horizon: t, yield_pct: pct(y), gap_to_fee_yield_pct: pct(alpha - y) })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            report.rows("longrun_yield", &rows)?;
        }
        Ok(report)
    }
}
