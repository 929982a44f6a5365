use clap::{Args, Subcommand, ValueEnum};
use cryptoyield::lending::{margrabe_breakdown, OneTouch};
use cryptoyield::oracle::{first_passage_value, price_payoff, Monitoring};
use cryptoyield::{one_touch_value, GbmSpec, LoanTerms, McEstimate};
use serde::Serialize;
use serde_json::json;

use super::failures;
use crate::error::CliError;
use crate::report::Report;

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleCmd {
    /// Terminal payoff on two correlated GBMs.
    Price(PriceArgs),
    /// Payout at the first passage of one GBM through a lower barrier.
    Touch(TouchArgs),
}

impl OracleCmd {
    pub fn check(&self) -> Vec<CliError> {
        match self {
            OracleCmd::Price(a) => failures([a.spec(0).validate().map_err(CliError::from)]),
            OracleCmd::Touch(a) => failures([a.spec(0, a.steps).validate().map_err(CliError::from), a.check_barrier()]),
        }
    }

    pub fn execute(&self, seed: u64) -> Result<Report, CliError> {
        match self {
            OracleCmd::Price(a) => a.execute(seed),
            OracleCmd::Touch(a) => a.execute(seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payoff {
    /// max(A - B, 0)
    Exchange,
    /// max(A, B)
    Max,
    /// min(A, B)
    Min,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PriceArgs {
    #[arg(long)]
    pub s0_a: f64,
    #[arg(long)]
    pub s0_b: f64,
    #[arg(long)]
    pub sigma_a: f64,
    #[arg(long)]
    pub sigma_b: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub drift_a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub drift_b: f64,
    /// Years.
    #[arg(long)]
    pub maturity: f64,
    #[arg(long, value_enum, default_value_t = Payoff::Exchange)]
    pub payoff: Payoff,
    /// Continuous rate used to discount the payoff.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub discount_rate: f64,
    /// Number of draws (antithetic pairs count once).
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long)]
    pub no_antithetic: bool,
}

fn estimate_json(e: &McEstimate, closed: Option<f64>) -> serde_json::Value {
    json!({
        "mean": e.mean,
        "std_error": e.std_error,
        "paths": e.paths,
        "closed_form": closed,
        "z_score": closed.map(|c| e.z_score(c)),
    })
}

impl PriceArgs {
    fn spec(&self, seed: u64) -> GbmSpec {
        GbmSpec {
            s0_a: self.s0_a,
            s0_b: self.s0_b,
            sigma_a: self.sigma_a,
            sigma_b: self.sigma_b,
            rho: self.rho,
            drift_a: self.drift_a,
            drift_b: self.drift_b,
            maturity: self.maturity,
            steps: 1,
            paths: self.paths,
            seed,
            antithetic: !self.no_antithetic,
        }
    }

    /// Exchange value under these dynamics: growth `drift - q` on each asset
    /// is a negative carry of `q - drift` in the loan parameterization.
    fn closed_form(&self) -> Result<f64, CliError> {
        let q = self.discount_rate;
        let terms = LoanTerms {
            collateral: self.s0_a,
            repayment: self.s0_b,
            sigma_alpha: self.sigma_a,
            sigma_beta: self.sigma_b,
            rho: self.rho,
            r_alpha: q - self.drift_a,
            r_beta: q - self.drift_b,
            maturity: self.maturity,
        };
        let x = margrabe_breakdown(&terms)?.value;
        Ok(match self.payoff {
            Payoff::Exchange => x,
            Payoff::Max => terms.discounted_repayment() + x,
            Payoff::Min => terms.discounted_collateral() - x,
        })
    }

    fn execute(&self, seed: u64) -> Result<Report, CliError> {
        let spec = self.spec(seed);
        let est = match self.payoff {
            Payoff::Exchange => price_payoff(&spec, |a, b| (a - b).max(0.0), self.discount_rate)?,
            Payoff::Max => price_payoff(&spec, f64::max, self.discount_rate)?,
            Payoff::Min => price_payoff(&spec, f64::min, self.discount_rate)?,
        };
        let closed = self.closed_form()?;
        let mut report = Report::new();
        report.metric("spec", spec).metric("estimate", estimate_json(&est, Some(closed)));
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitoringArg {
    /// Grid points plus the bridge crossing probability between them.
    Bridge,
    /// Grid points only.
    Discrete,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TouchArgs {
    #[arg(long)]
    pub spot: f64,
    #[arg(long)]
    pub barrier: f64,
    #[arg(long, default_value_t = 1.0)]
    pub payout: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub drift: f64,
    /// Continuous discount rate for the payout.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rate: f64,
    #[arg(long)]
    pub maturity: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: u32,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, value_enum, default_value_t = MonitoringArg::Bridge)]
    pub monitoring: MonitoringArg,
    /// Step counts for a discretization study under both monitoring modes.
    #[arg(long, value_delimiter = ',')]
    pub study: Vec<u32>,
}

#[derive(Serialize)]
struct StudyRow {
    steps: u32,
    discrete_mean: f64,
    discrete_std_error: f64,
    discrete_bias: f64,
    bridge_mean: f64,
    bridge_std_error: f64,
    bridge_bias: f64,
}

impl TouchArgs {
    fn spec(&self, seed: u64, steps: u32) -> GbmSpec {
        GbmSpec::single(self.spot, self.sigma, self.drift, self.maturity, steps, self.paths, seed)
    }

    fn check_barrier(&self) -> Result<(), CliError> {
        if !(self.barrier > 0.0 && self.barrier <= self.spot) {
            return Err(CliError::input(format!(
                "barrier {} must be positive and not above the spot {}",
                self.barrier, self.spot
            )));
        }
        Ok(())
    }

    fn estimate(&self, seed: u64, steps: u32, m: Monitoring) -> Result<McEstimate, CliError> {
        Ok(first_passage_value(&self.spec(seed, steps), self.barrier, self.payout, self.rate, m)?)
    }

    fn execute(&self, seed: u64) -> Result<Report, CliError> {
        self.check_barrier()?;
        let closed = one_touch_value(&OneTouch {
            spot: self.spot,
            barrier: self.barrier,
            payout: self.payout,
            sigma: self.sigma,
            drift: self.drift,
            rate: self.rate,
            maturity: self.maturity,
        })?;
        let monitoring = match self.monitoring {
            MonitoringArg::Bridge => Monitoring::BrownianBridge,
            MonitoringArg::Discrete => Monitoring::Discrete,
        };
        let est = self.estimate(seed, self.steps, monitoring)?;
        let mut report = Report::new();
        report
            .metric("spec", self.spec(seed, self.steps))
            .metric("monitoring", monitoring)
            .metric("estimate", estimate_json(&est, Some(closed)));

        if !self.study.is_empty() {
            let rows = self
                .study
                .iter()
                .map(|&n| {
                    let d = self.estimate(seed, n, Monitoring::Discrete)?;
                    let b = self.estimate(seed, n, Monitoring::BrownianBridge)?;
                    Ok(StudyRow {
                        steps: n,
                        discrete_mean: d.mean,
                        discrete_std_error: d.std_error,
                        discrete_bias: d.mean - closed,
                        bridge_mean: b.mean,
                        bridge_std_error: b.std_error,
                        bridge_bias: b.mean - closed,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            report.rows("study", &rows)?;
        }
        Ok(report)
    }
}
