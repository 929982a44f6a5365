use std::path::PathBuf;

use clap::Args;
use cryptoyield::staking::{
    candidate_days, daily_return, percentile_bands, read_validators_csv, slash_cost, StakingError, ValidatorRecord,
};
use cryptoyield::stats;
use serde::Serialize;

use super::{failures, level_name, num, ok, read_csv};
use crate::error::CliError;
use crate::report::{pct, Report};

#[derive(Debug, Clone, Args, Serialize)]
pub struct StakeArgs {
    /// Balance snapshots, columns `validator_id,timestamp,balance,state`.
    #[arg(long)]
    pub validators: PathBuf,
    /// Percentile levels of the daily cohort bands.
    #[arg(long, value_delimiter = ',', default_value = "5,25,50,75,95")]
    pub levels: Vec<f64>,
    /// Percent of the network failing together, for the slashing cost.
    #[arg(long)]
    pub failed_share: Option<f64>,
}

#[derive(Serialize)]
struct ReturnRow<'a> {
    validator_id: &'a str,
    date: String,
    annualized_return_pct: f64,
}

impl StakeArgs {
    fn load(&self) -> Result<Vec<ValidatorRecord>, CliError> {
        read_csv(&self.validators, read_validators_csv)
    }

    fn check_levels(&self) -> Result<(), CliError> {
        match self.levels.iter().find(|l| !(0.0..=100.0).contains(*l)) {
            Some(l) => Err(CliError::input(format!("percentile level {l} outside [0, 100]"))),
            None if self.levels.is_empty() => Err(CliError::input("no percentile levels given")),
            None => Ok(()),
        }
    }

    pub fn check(&self) -> Vec<CliError> {
        failures([
            ok(self.load()),
            self.check_levels(),
            ok(self.failed_share.map(slash_cost).transpose().map_err(CliError::from)),
        ])
    }

    pub fn execute(&self) -> Result<Report, CliError> {
        self.check_levels()?;
        let slash = self.failed_share.map(slash_cost).transpose()?;
        let validators = self.load()?;
        let days = candidate_days(&validators);

        let mut returns = Vec::new();
        let mut all = Vec::new();
        for &day in &days {
            for v in &validators {
                if let Ok(r) = daily_return(v, day) {
                    all.push(r.annualized_return);
                    returns.push(ReturnRow {
                        validator_id: v.id(),
                        date: day.to_string(),
                        annualized_return_pct: pct(r.annualized_return),
                    });
                }
            }
        }

        let mut header = vec!["date".to_string(), "eligible".into(), "excluded".into()];
        header.extend(self.levels.iter().map(|l| format!("{}_pct", level_name(*l))));
        let mut bands = Vec::new();
        let mut empty_days = 0;
        for &day in &days {
            match percentile_bands(&validators, day, &self.levels) {
                Ok(b) => {
                    let mut row = vec![b.date.to_string(), b.eligible.to_string(), b.excluded.to_string()];
                    row.extend(b.bands.iter().map(|(_, v)| num(pct(*v))));
                    bands.push(row);
                }
                Err(StakingError::EmptyCohort(_)) => empty_days += 1,
                Err(e) => return Err(e.into()),
            }
        }

        let mut report = Report::new();
        report
            .metric("validators", validators.len())
            .metric("days", days.len())
            .metric("days_without_eligible_validators", empty_days)
            .metric("validator_days", all.len())
            .metric("mean_return_pct", stats::mean(&all).map(pct))
            .metric("median_return_pct", stats::percentile(&all, 50.0).ok().map(pct))
            .metric("slash_cost_pct", slash);
        report.rows("returns", &returns)?;
        report.table("bands", &header, &bands)?;
        Ok(report)
    }
}
