//! Replays an agreement against ordered oracle ticks and party actions.
//!
//! ```toml
//! [agreement]
//! notional_a = 100.0
//! notional_b = 100.0
//! initial_rate = 1.0
//! margin_a = 5.0
//! margin_b = 5.0
//! threshold = 0.5
//! termination_fee = 0.5
//! start = "2024-01-01"
//! maturity = "2024-12-31"
//! leg_a = { fixed = 0.04 }
//! leg_b = { index = "ref", spread = 0.001 }
//!
//! [[events]]
//! kind = "initiate"
//! time = "2024-01-01"
//!
//! [[events]]
//! kind = "tick"
//! time = "2024-01-02"
//! rate = 1.01
//! top_up_b = 1.0        # optional same-step replenishment
//!
//! [[events]]
//! kind = "accrue"
//! time = "2024-03-31"
//! days = 90
//! fixings = { ref = 0.039 }
//! ```
//!
//! Other kinds: `replenish` (`party`, `amount`), `terminate` (`party`) and
//! `mature`. Ticks arriving after the swap has ended are recorded as ignored;
//! any other action on an ended swap is an error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::agreement::timestamp;
use super::{Party, Period, Settlement, Swap, SwapAgreement, Wallets, XccyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XccyEvent {
    Initiate {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
    },
    Tick {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
        rate: f64,
        #[serde(default)]
        top_up_a: Option<f64>,
        #[serde(default)]
        top_up_b: Option<f64>,
    },
    Replenish {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
        party: Party,
        amount: f64,
    },
    Accrue {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
        days: u32,
        #[serde(default)]
        fixings: BTreeMap<String, f64>,
    },
    Terminate {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
        party: Party,
    },
    Mature {
        #[serde(deserialize_with = "timestamp")]
        time: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XccyScenario {
    pub agreement: SwapAgreement,
    /// Defaults to [`SwapAgreement::default_wallets`].
    #[serde(default)]
    pub wallets: Option<Wallets>,
    #[serde(default)]
    pub events: Vec<XccyEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XccyRun {
    pub swap: Swap,
    pub settlement: Option<Settlement>,
    pub ignored_ticks: usize,
}

fn apply(swap: &mut Swap, event: &XccyEvent, ignored: &mut usize) -> Result<(), XccyError> {
    match event {
        XccyEvent::Initiate { time } => swap.initiate(*time),
        XccyEvent::Tick { time, rate, top_up_a, top_up_b } => {
            if swap.state().is_terminal() {
                *ignored += 1;
                return Ok(());
            }
            let mut tops = Vec::new();
            if let Some(v) = top_up_a {
                tops.push((Party::A, *v));
            }
            if let Some(v) = top_up_b {
                tops.push((Party::B, *v));
            }
            swap.on_tick(*time, *rate, &tops).map(|_| ())
        }
        XccyEvent::Replenish { time, party, amount } => swap.replenish(*time, *party, *amount).map(|_| ()),
        XccyEvent::Accrue { time, days, fixings } => {
            let period = Period { days: *days, fixings: fixings.clone() };
            swap.accrue_legs(*time, &period).map(|_| ())
        }
        XccyEvent::Terminate { time, party } => swap.voluntary_terminate(*time, *party).map(|_| ()),
        XccyEvent::Mature { time } => swap.mature(*time).map(|_| ()),
    }
}

pub fn run_xccy(scenario: &XccyScenario) -> Result<XccyRun, XccyError> {
    let wallets = scenario.wallets.clone().unwrap_or_else(|| scenario.agreement.default_wallets());
    let mut swap = Swap::new(scenario.agreement.clone(), &wallets)?;
    let mut ignored = 0;
    for (i, e) in scenario.events.iter().enumerate() {
        apply(&mut swap, e, &mut ignored)
            .map_err(|source| XccyError::Event { index: i + 1, source: Box::new(source) })?;
    }
    Ok(XccyRun { settlement: swap.settlement().cloned(), swap, ignored_ticks: ignored })
}
