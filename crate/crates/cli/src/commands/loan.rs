use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use cryptoyield::lending::{
    liquidation_touch, loan_value_with_liquidation, loan_values, margrabe_breakdown, recycling_leverage,
    recycling_limit, utilization_rate, LiquidationSpec, LoanTerms, UtilizationCurve, COMPOUND_PENALTY,
};
use serde::{Deserialize, Serialize};

use super::{failures, ok, read_document};
use crate::error::{finite, CliError};
use crate::report::{pct, Report};

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoanCmd {
    /// Value borrower and lender positions of a collateralized loan.
    Price(PriceArgs),
    /// Borrow rate against pool utilization.
    Rates(RatesArgs),
    /// Leverage from re-posting borrowed funds as collateral.
    Recycle(RecycleArgs),
}

impl LoanCmd {
    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            LoanCmd::Price(a) => a.terms.iter().map(PathBuf::as_path).collect(),
            _ => vec![],
        }
    }

    pub fn check(&self) -> Vec<CliError> {
        match self {
            LoanCmd::Price(a) => failures([ok(a.load())]),
            LoanCmd::Rates(a) => failures([ok(a.curve().validate().map_err(CliError::from))]),
            LoanCmd::Recycle(a) => failures([ok(recycling_limit(a.haircut).map_err(CliError::from))]),
        }
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        match self {
            LoanCmd::Price(a) => a.execute(),
            LoanCmd::Rates(a) => a.execute(),
            LoanCmd::Recycle(a) => a.execute(),
        }
    }
}

/// Loan terms given in a file: the `LoanTerms` fields at top level and an
/// optional `[liquidation]` table with `barrier` and `penalty`.
#[derive(Debug, Clone, Deserialize)]
struct TermsFile {
    #[serde(flatten)]
    terms: LoanTerms,
    #[serde(default)]
    liquidation: Option<LiquidationSpec>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PriceArgs {
    /// Terms file (TOML or JSON); replaces the term flags.
    #[arg(long, conflicts_with_all = ["collateral", "repayment", "sigma_alpha", "sigma_beta", "maturity", "barrier"])]
    pub terms: Option<PathBuf>,
    /// Present value A of the collateral.
    #[arg(long, required_unless_present = "terms")]
    pub collateral: Option<f64>,
    /// Value B of the amount due at maturity.
    #[arg(long, required_unless_present = "terms")]
    pub repayment: Option<f64>,
    /// Volatility of the collateral token.
    #[arg(long, required_unless_present = "terms")]
    pub sigma_alpha: Option<f64>,
    /// Volatility of the borrowed token.
    #[arg(long, required_unless_present = "terms")]
    pub sigma_beta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
    /// Continuous rate earned on the collateral token.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r_alpha: f64,
    /// Continuous rate on the borrowed token.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r_beta: f64,
    /// Years to maturity.
    #[arg(long, required_unless_present = "terms")]
    pub maturity: Option<f64>,
    /// Collateral ratio A/B at which the position is liquidated.
    #[arg(long)]
    pub barrier: Option<f64>,
    /// Liquidation penalty as a fraction of the repayment.
    #[arg(long, default_value_t = COMPOUND_PENALTY)]
    pub penalty: f64,
    /// Also value the loan over this many collateral ratios in [0.5, 3].
    #[arg(long, default_value_t = 0)]
    pub sweep: usize,
}

#[derive(Serialize)]
struct SweepRow {
    collateral_ratio: f64,
    exchange_option_value: f64,
    borrower_value: f64,
    lender_value: f64,
}

impl PriceArgs {
    fn load(&self) -> Result<(LoanTerms, Option<LiquidationSpec>), CliError> {
        let (terms, liq) = match &self.terms {
            Some(p) => {
                let f: TermsFile = read_document(p)?;
                (f.terms, f.liquidation)
            }
            None => {
                let need =
                    |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::input(format!("--{name} is required")));
                let terms = LoanTerms {
                    collateral: need(self.collateral, "collateral")?,
                    repayment: need(self.repayment, "repayment")?,
                    sigma_alpha: need(self.sigma_alpha, "sigma-alpha")?,
                    sigma_beta: need(self.sigma_beta, "sigma-beta")?,
                    rho: self.rho,
                    r_alpha: self.r_alpha,
                    r_beta: self.r_beta,
                    maturity: need(self.maturity, "maturity")?,
                };
                let liq = self.barrier.map(|barrier| LiquidationSpec { barrier, penalty: self.penalty });
                (terms, liq)
            }
        };
        terms.validate()?;
        if let Some(l) = &liq {
            l.validate()?;
        }
        Ok((terms, liq))
    }

    fn execute(&self) -> Result<Report, CliError> {
        let (terms, liq) = self.load()?;
        let breakdown = margrabe_breakdown(&terms)?;
        let valuation = match &liq {
            Some(l) => loan_value_with_liquidation(&terms, l)?,
            None => loan_values(&terms)?,
        };
        finite("exchange option value", breakdown.value)?;
        finite("borrower value", valuation.borrower_value)?;

        let mut report = Report::new();
        report
            .metric("terms", terms)
            .metric("collateral_ratio", terms.collateral_ratio())
            .metric("discounted_collateral", terms.discounted_collateral())
            .metric("discounted_repayment", terms.discounted_repayment())
            .metric("breakdown", breakdown)
            .metric("valuation", valuation);
        if let Some(l) = &liq {
            let touch = liquidation_touch(&terms, l);
            report.metric("liquidation", l).metric("liquidation_touch", touch);
        }

        if self.sweep > 0 {
            let n = self.sweep.max(2);
            let rows = (0..n)
                .map(|i| {
                    let ratio = 0.5 + 2.5 * i as f64 / (n - 1) as f64;
                    let t = LoanTerms { collateral: ratio * terms.repayment, ..terms };
                    let v = match &liq {
                        Some(l) => loan_value_with_liquidation(&t, l)?,
                        None => loan_values(&t)?,
                    };
                    Ok(SweepRow {
                        collateral_ratio: ratio,
                        exchange_option_value: finite("exchange option value", v.exchange_option_value)?,
                        borrower_value: v.borrower_value,
                        lender_value: v.lender_value,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            report.rows("ratio_sweep", &rows)?;
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatesArgs {
    /// Utilization where the steep segment starts.
    #[arg(long, default_value_t = 0.8)]
    pub kink: f64,
    #[arg(long, default_value_t = 0.0)]
    pub base_rate: f64,
    /// Slope below the kink.
    #[arg(long, default_value_t = 0.04)]
    pub slope_low: f64,
    /// Slope above the kink.
    #[arg(long, default_value_t = 0.75)]
    pub slope_high: f64,
    /// Grid points over utilization in [0, 1].
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Serialize)]
struct RateRow {
    utilization_pct: f64,
    borrow_rate_pct: f64,
}

impl RatesArgs {
    fn curve(&self) -> UtilizationCurve {
        UtilizationCurve {
            kink: self.kink,
            base_rate: self.base_rate,
            slope_low: self.slope_low,
            slope_high: self.slope_high,
        }
    }

    fn execute(&self) -> Result<Report, CliError> {
        let curve = self.curve();
        curve.validate()?;
        let n = self.points.max(2);
        let rows = (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                Ok(RateRow { utilization_pct: pct(u), borrow_rate_pct: pct(utilization_rate(&curve, u)?) })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut report = Report::new();
        report
            .metric("curve", curve)
            .metric("rate_at_kink_pct", pct(utilization_rate(&curve, curve.kink)?))
            .metric("rate_at_full_pct", pct(utilization_rate(&curve, 1.0)?));
        report.rows("utilization", &rows)?;
        Ok(report)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecycleArgs {
    /// Fraction of each deposit that can be borrowed back.
    #[arg(long)]
    pub haircut: f64,
    /// Longest chain of deposit-borrow rounds to tabulate.
    #[arg(long, default_value_t = 20)]
    pub max_chain: u32,
}

#[derive(Serialize)]
struct LeverageRow {
    chain_length: u32,
    leverage: f64,
}

impl RecycleArgs {
    fn execute(&self) -> Result<Report, CliError> {
        let limit = recycling_limit(self.haircut)?;
        let rows = (1..=self.max_chain.max(1))
            .map(|n| Ok(LeverageRow { chain_length: n, leverage: recycling_leverage(self.haircut, n)? }))
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut report = Report::new();
        report
            .metric("haircut", self.haircut)
            .metric("leverage_limit", limit)
            .metric("leverage_at_max_chain", rows.last().map(|r| r.leverage));
        report.rows("leverage", &rows)?;
        Ok(report)
    }
}
