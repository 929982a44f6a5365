use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use cryptoyield::xccy::scenario::{run_xccy, XccyScenario};
use cryptoyield::xccy::{buffer_size, max_leverage, Account, Party, Settlement, Token};
use num::rational::BigRational;
use num::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use super::{failures, ok, read_document};
use crate::error::CliError;
use crate::report::{pct, Report};

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XccyCmd {
    /// Replay an agreement against rate ticks and party actions.
    Simulate(SimulateArgs),
    /// Margin fraction for a volatility and swap life.
    Margin(MarginArgs),
    /// Leverage reachable by re-posting received notionals as margin.
    Leverage(LeverageArgs),
}

impl XccyCmd {
    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            XccyCmd::Simulate(a) => vec![a.scenario.as_path()],
            _ => vec![],
        }
    }

    pub fn check(&self) -> Vec<CliError> {
        match self {
            XccyCmd::Simulate(a) => failures([ok(a.load())]),
            XccyCmd::Margin(a) => failures([ok(a.size())]),
            XccyCmd::Leverage(a) => failures([ok(max_leverage(a.margin, a.max_chain.max(1)).map_err(CliError::from))]),
        }
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        match self {
            XccyCmd::Simulate(a) => a.execute(),
            XccyCmd::Margin(a) => a.execute(),
            XccyCmd::Leverage(a) => a.execute(),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Scenario with `[agreement]`, optional `[wallets]` and `[[events]]`.
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Serialize)]
struct AuditOut<'a> {
    seq: usize,
    time: i64,
    event: &'a str,
    from: &'static str,
    to: &'static str,
    token: &'static str,
    amount: f64,
    amount_exact: String,
}

fn account(a: Account) -> &'static str {
    match a {
        Account::Wallet(Party::A) => "A",
        Account::Wallet(Party::B) => "B",
        Account::Contract => "contract",
    }
}

fn token(t: Token) -> &'static str {
    match t {
        Token::Alpha => "alpha",
        Token::Beta => "beta",
    }
}

fn amount(r: &BigRational) -> serde_json::Value {
    json!({ "value": r.to_f64(), "exact": r.to_string() })
}

fn settlement_json(s: &Settlement) -> serde_json::Value {
    json!({
        "kind": s.kind,
        "time": s.time,
        "rate": s.rate.to_f64(),
        "party": s.party,
        "payer": s.payer,
        "exposure": amount(&s.exposure),
        "transferred": amount(&s.transferred),
        "shortfall": amount(&s.shortfall),
        "fee": amount(&s.fee),
    })
}

impl SimulateArgs {
    fn load(&self) -> Result<XccyScenario, CliError> {
        read_document(&self.scenario)
    }

    fn execute(&self) -> Result<Report, CliError> {
        let sc = self.load()?;
        let run = run_xccy(&sc).map_err(|e| CliError::file(&self.scenario, e))?;
        let swap = &run.swap;
        let ledger = swap.ledger();
        let audit: Vec<AuditOut> = ledger
            .audit()
            .iter()
            .map(|e| AuditOut {
                seq: e.seq,
                time: e.time,
                event: &e.event,
                from: account(e.from),
                to: account(e.to),
                token: token(e.token),
                amount: e.amount_f64(),
                amount_exact: e.amount.to_string(),
            })
            .collect();
        let balances: serde_json::Map<String, serde_json::Value> =
            ledger.balances().map(|(a, t, v)| (format!("{}_{}", account(a), token(t)), amount(v))).collect();

        let mut report = Report::new();
        report
            .metric("final_state", swap.state().to_string())
            .metric("events", sc.events.len())
            .metric("ignored_ticks", run.ignored_ticks)
            .metric("transfers", audit.len())
            .metric("balances", balances)
            .metric("total_alpha", amount(&ledger.total(Token::Alpha)))
            .metric("total_beta", amount(&ledger.total(Token::Beta)))
            .metric("settlement", run.settlement.as_ref().map(settlement_json));
        report.rows("audit", &audit)?;
        report.rows("history", swap.history())?;
        Ok(report)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MarginArgs {
    /// Annualized volatility of the exchange rate.
    #[arg(long)]
    pub sigma: f64,
    /// Swap life in years.
    #[arg(long)]
    pub duration: f64,
    /// Multiple of one standard deviation to cover.
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
}

impl MarginArgs {
    fn size(&self) -> Result<f64, CliError> {
        Ok(buffer_size(self.sigma, self.duration, self.multiplier)?)
    }

    fn execute(&self) -> Result<Report, CliError> {
        let mut report = Report::new();
        report
            .metric("sigma", self.sigma)
            .metric("duration", self.duration)
            .metric("multiplier", self.multiplier)
            .metric("margin_fraction_pct", pct(self.size()?));
        Ok(report)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LeverageArgs {
    /// Margin as a fraction of notional.
    #[arg(long)]
    pub margin: f64,
    /// Longest recycling chain to tabulate.
    #[arg(long, default_value_t = 50)]
    pub max_chain: u32,
}

#[derive(Serialize)]
struct LeverageRow {
    chain_length: u32,
    leverage: f64,
}

impl LeverageArgs {
    fn execute(&self) -> Result<Report, CliError> {
        let top = max_leverage(self.margin, self.max_chain.max(1))?;
        let rows = (1..=self.max_chain.max(1))
            .map(|n| Ok(LeverageRow { chain_length: n, leverage: max_leverage(self.margin, n)?.achievable }))
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut report = Report::new();
        report.metric("bound", top);
        report.rows("leverage", &rows)?;
        Ok(report)
    }
}
