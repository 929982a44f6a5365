use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize};

use super::ledger::{Account, Ledger, Wallets};
use super::{exact_decimal, positive, Party, Token, XccyError};
use crate::ingest::parse_timestamp;

const DAYS_PER_YEAR: i64 = 365;

/// Accepts epoch seconds or an ISO-8601 date/time string.
pub(crate) fn timestamp<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(v),
        Raw::Text(s) => parse_timestamp(&s).ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{s}`"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdBase {
    /// Residual margin as a fraction of the margin posted at initiation.
    #[default]
    InitialMargin,
    /// Residual margin as a fraction of the party's posted notional.
    Notional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LegRate {
    Fixed { fixed: f64 },
    Floating { index: String },
}

/// A periodic interest leg: annual `rate + spread`, 365-day accrual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSpec {
    #[serde(flatten)]
    pub rate: LegRate,
    #[serde(default)]
    pub spread: f64,
}

impl Default for LegSpec {
    fn default() -> Self {
        Self { rate: LegRate::Fixed { fixed: 0.0 }, spread: 0.0 }
    }
}

/// Swap terms. `leg_a` is paid by A in β on `notional_b` (the β it
/// received); `leg_b` is paid by B in α on `notional_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapAgreement {
    pub notional_a: f64,
    pub notional_b: f64,
    /// `X0`, β per α.
    pub initial_rate: f64,
    /// Rate of the reversal at maturity; defaults to `X0`.
    #[serde(default)]
    pub final_rate: Option<f64>,
    pub margin_a: f64,
    pub margin_b: f64,
    pub threshold: f64,
    #[serde(default)]
    pub threshold_base: ThresholdBase,
    /// Paid in the terminating party's own token.
    #[serde(default)]
    pub termination_fee: f64,
    /// Each margin must be at least this fraction of the party's notional.
    #[serde(default)]
    pub min_margin_fraction: f64,
    #[serde(deserialize_with = "timestamp")]
    pub start: i64,
    #[serde(deserialize_with = "timestamp")]
    pub maturity: i64,
    #[serde(default)]
    pub leg_a: LegSpec,
    #[serde(default)]
    pub leg_b: LegSpec,
}

impl SwapAgreement {
    /// Every party holds twice its own notional and margin, plus the fee,
    /// and nothing of the other token.
    pub fn default_wallets(&self) -> Wallets {
        Wallets {
            a_alpha: 2.0 * (self.notional_a + self.margin_a) + self.termination_fee,
            a_beta: 0.0,
            b_alpha: 0.0,
            b_beta: 2.0 * (self.notional_b + self.margin_b) + self.termination_fee,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Exact {
    notional_a: BigRational,
    notional_b: BigRational,
    x_final: BigRational,
    reversal_b: BigRational,
    initial_margin: [BigRational; 2],
    threshold: BigRational,
    fee: BigRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SwapState {
    Created,
    Active,
    Matured,
    TerminatedBreach(Party),
    TerminatedVoluntary(Party),
}

impl SwapState {
    pub fn is_terminal(self) -> bool {
        !matches!(self, SwapState::Created | SwapState::Active)
    }
}

impl fmt::Display for SwapState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwapState::Created => write!(f, "created"),
            SwapState::Active => write!(f, "active"),
            SwapState::Matured => write!(f, "matured"),
            SwapState::TerminatedBreach(p) => write!(f, "terminated_breach({p:?})"),
            SwapState::TerminatedVoluntary(p) => write!(f, "terminated_voluntary({p:?})"),
        }
    }
}

/// Mark-to-market at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Marks {
    pub rate: BigRational,
    /// A's mark in β, `notional_a (X_t - X_final)`; B's is the negative.
    pub gain_a: BigRational,
    /// Adverse exposure charged against each margin, in that margin's token.
    pub adverse: [BigRational; 2],
    pub residual: [BigRational; 2],
    /// Residual over the threshold base.
    pub fraction: [f64; 2],
}

impl Marks {
    pub fn gain(&self, party: Party) -> BigRational {
        match party {
            Party::A => self.gain_a.clone(),
            Party::B => -self.gain_a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SettlementKind {
    Breach,
    Voluntary,
    Maturity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settlement {
    pub kind: SettlementKind,
    pub time: i64,
    pub rate: BigRational,
    /// Breaching or terminating party.
    pub party: Option<Party>,
    /// Party with the adverse mark, if any.
    pub payer: Option<Party>,
    /// Adverse mark in the payer's token.
    pub exposure: BigRational,
    pub transferred: BigRational,
    /// Exposure not covered by the payer's margin.
    pub shortfall: BigRational,
    pub fee: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutcome {
    pub marks: Marks,
    pub breached: Option<Party>,
    pub settlement: Option<Settlement>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Period {
    pub days: u32,
    /// Annual fixings for floating indices.
    #[serde(default)]
    pub fixings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegFlow {
    pub payer: Party,
    pub token: Token,
    /// All-in annual rate of the leg.
    pub rate: BigRational,
    /// Owed by `payer`; negative means the counterparty pays.
    pub amount: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub time: i64,
    pub event: String,
    pub state: String,
    pub rate: Option<f64>,
    pub note: String,
}

/// One agreement and the ledger it settles against.
#[derive(Debug, Clone, PartialEq)]
pub struct Swap {
    agreement: SwapAgreement,
    exact: Exact,
    state: SwapState,
    ledger: Ledger,
    margin: [BigRational; 2],
    last_tick: Option<(i64, BigRational)>,
    history: Vec<HistoryEntry>,
    settlement: Option<Settlement>,
}

fn idx(p: Party) -> usize {
    match p {
        Party::A => 0,
        Party::B => 1,
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn fraction_of(a: &BigRational, b: &BigRational) -> f64 {
    to_f64(&(a / b))
}

impl Swap {
    pub fn new(agreement: SwapAgreement, wallets: &Wallets) -> Result<Self, XccyError> {
        let notional_a = positive(agreement.notional_a, "notional_a")?;
        let notional_b = positive(agreement.notional_b, "notional_b")?;
        let x0 = positive(agreement.initial_rate, "initial_rate")?;
        let x_final = match agreement.final_rate {
            Some(v) => positive(v, "final_rate")?,
            None => x0.clone(),
        };
        let implied = &notional_a * &x0;
        let gap = to_f64(&((&implied - &notional_b) / &notional_b)).abs();
        if gap > 1e-9 {
            return Err(XccyError::NotionalMismatch { notional_b: agreement.notional_b, implied: to_f64(&implied) });
        }
        if !(0.0..1.0).contains(&agreement.threshold) {
            return Err(XccyError::BadThreshold(agreement.threshold));
        }
        if agreement.maturity <= agreement.start {
            return Err(XccyError::BadSchedule);
        }
        let fee = exact_decimal(agreement.termination_fee).ok_or(XccyError::NotFinite("termination_fee"))?;
        if fee < BigRational::zero() {
            return Err(XccyError::NonPositive("termination_fee (or zero)"));
        }
        let reversal_b = match agreement.final_rate {
            Some(_) => &notional_a * &x_final,
            None => notional_b.clone(),
        };
        let exact = Exact {
            initial_margin: [positive(agreement.margin_a, "margin_a")?, positive(agreement.margin_b, "margin_b")?],
            threshold: exact_decimal(agreement.threshold).ok_or(XccyError::NotFinite("threshold"))?,
            notional_a,
            notional_b,
            x_final,
            reversal_b,
            fee,
        };
        let w = |v: f64, name| exact_decimal(v).filter(|r| *r >= BigRational::zero()).ok_or(XccyError::NotFinite(name));
        let ledger = Ledger::with_balances([
            (Account::Wallet(Party::A), Token::Alpha, w(wallets.a_alpha, "wallet a_alpha")?),
            (Account::Wallet(Party::A), Token::Beta, w(wallets.a_beta, "wallet a_beta")?),
            (Account::Wallet(Party::B), Token::Alpha, w(wallets.b_alpha, "wallet b_alpha")?),
            (Account::Wallet(Party::B), Token::Beta, w(wallets.b_beta, "wallet b_beta")?),
        ]);
        Ok(Self {
            agreement,
            exact,
            state: SwapState::Created,
            ledger,
            margin: [BigRational::zero(), BigRational::zero()],
            last_tick: None,
            history: Vec::new(),
            settlement: None,
        })
    }

    pub fn agreement(&self) -> &SwapAgreement {
        &self.agreement
    }

    pub fn state(&self) -> SwapState {
        self.state
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn margin(&self, party: Party) -> &BigRational {
        &self.margin[idx(party)]
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn settlement(&self) -> Option<&Settlement> {
        self.settlement.as_ref()
    }

    pub fn last_tick(&self) -> Option<(i64, &BigRational)> {
        self.last_tick.as_ref().map(|(t, x)| (*t, x))
    }

    pub fn notional(&self, party: Party) -> &BigRational {
        match party {
            Party::A => &self.exact.notional_a,
            Party::B => &self.exact.notional_b,
        }
    }

    fn require(&self, op: &'static str, state: SwapState) -> Result<(), XccyError> {
        if self.state == state {
            Ok(())
        } else {
            Err(XccyError::InvalidState { op, state: self.state.to_string() })
        }
    }

    fn log(&mut self, time: i64, event: &str, rate: Option<&BigRational>, note: String) {
        self.history.push(HistoryEntry {
            time,
            event: event.to_string(),
            state: self.state.to_string(),
            rate: rate.map(to_f64),
            note,
        });
    }

    fn base(&self, party: Party) -> BigRational {
        match self.agreement.threshold_base {
            ThresholdBase::InitialMargin => self.exact.initial_margin[idx(party)].clone(),
            ThresholdBase::Notional => self.notional(party).clone(),
        }
    }

    /// Locks margins and exchanges notionals.
    pub fn initiate(&mut self, time: i64) -> Result<(), XccyError> {
        self.require("initiate", SwapState::Created)?;
        let min =
            exact_decimal(self.agreement.min_margin_fraction).ok_or(XccyError::NotFinite("min_margin_fraction"))?;
        for p in [Party::A, Party::B] {
            let m = &self.exact.initial_margin[idx(p)];
            let sized = *m >= &min * self.notional(p);
            let above_threshold = match self.agreement.threshold_base {
                ThresholdBase::InitialMargin => true,
                ThresholdBase::Notional => *m >= &self.exact.threshold * self.notional(p),
            };
            if !sized || !above_threshold {
                return Err(XccyError::UndersizedMargin(p));
            }
        }
        let (wa, wb) = (Account::Wallet(Party::A), Account::Wallet(Party::B));
        let mut next = self.ledger.clone();
        next.transfer(time, "initiate", wa, wb, Token::Alpha, &self.exact.notional_a)?;
        next.transfer(time, "initiate", wb, wa, Token::Beta, &self.exact.notional_b)?;
        next.transfer(time, "initiate", wa, Account::Contract, Token::Alpha, &self.exact.initial_margin[0])?;
        next.transfer(time, "initiate", wb, Account::Contract, Token::Beta, &self.exact.initial_margin[1])?;
        self.ledger = next;
        self.margin = self.exact.initial_margin.clone();
        self.state = SwapState::Active;
        self.log(time, "initiate", None, String::new());
        Ok(())
    }

    fn marks_at(&self, rate: &BigRational) -> Marks {
        let gain_a = &self.exact.notional_a * (rate - &self.exact.x_final);
        let zero = BigRational::zero();
        let adverse_b = if gain_a > zero { gain_a.clone() } else { zero.clone() };
        let adverse_a = if gain_a < zero { -gain_a.clone() / rate } else { zero };
        let adverse = [adverse_a, adverse_b];
        let residual = [&self.margin[0] - &adverse[0], &self.margin[1] - &adverse[1]];
        let fraction =
            [fraction_of(&residual[0], &self.base(Party::A)), fraction_of(&residual[1], &self.base(Party::B))];
        Marks { rate: rate.clone(), gain_a, adverse, residual, fraction }
    }

    fn check_tick(&self, time: i64, rate: f64) -> Result<BigRational, XccyError> {
        self.require("mark", SwapState::Active)?;
        if let Some((previous, _)) = self.last_tick {
            if time <= previous {
                return Err(XccyError::StaleTick { time, previous });
            }
        }
        positive(rate, "oracle rate")
    }

    /// Marks at an oracle tick without recording it.
    pub fn mark(&self, time: i64, rate: f64) -> Result<Marks, XccyError> {
        let x = self.check_tick(time, rate)?;
        Ok(self.marks_at(&x))
    }

    fn breached(&self, marks: &Marks) -> Option<Party> {
        let below = |p: Party| marks.residual[idx(p)] < &self.exact.threshold * self.base(p);
        match (below(Party::A), below(Party::B)) {
            (false, false) => None,
            (true, false) => Some(Party::A),
            (false, true) => Some(Party::B),
            (true, true) => Some(if marks.gain_a > BigRational::zero() { Party::B } else { Party::A }),
        }
    }

    /// Records a tick, applies same-step top-ups, then terminates on breach.
    pub fn on_tick(&mut self, time: i64, rate: f64, top_ups: &[(Party, f64)]) -> Result<TickOutcome, XccyError> {
        let x = self.check_tick(time, rate)?;
        for (party, amount) in top_ups {
            self.top_up(time, *party, *amount)?;
        }
        self.last_tick = Some((time, x.clone()));
        let marks = self.marks_at(&x);
        let breached = self.breached(&marks);
        let note = format!("fraction_a={:.6} fraction_b={:.6}", marks.fraction[0], marks.fraction[1]);
        self.log(time, "tick", Some(&x), note);
        let settlement = match breached {
            Some(p) => {
                let s = self.settle(time, &x, SettlementKind::Breach, Some(p), BigRational::zero())?;
                self.state = SwapState::TerminatedBreach(p);
                self.finish(s.clone(), "breach");
                Some(s)
            }
            None => None,
        };
        Ok(TickOutcome { marks, breached, settlement })
    }

    pub fn check_and_terminate(&mut self, time: i64, rate: f64) -> Result<TickOutcome, XccyError> {
        self.on_tick(time, rate, &[])
    }

    fn top_up(&mut self, time: i64, party: Party, amount: f64) -> Result<(), XccyError> {
        let amt = positive(amount, "replenish amount")?;
        self.ledger.transfer(time, "replenish", Account::Wallet(party), Account::Contract, party.home_token(), &amt)?;
        self.margin[idx(party)] += amt;
        Ok(())
    }

    /// Adds margin between ticks; returns marks at the last observed rate.
    pub fn replenish(&mut self, time: i64, party: Party, amount: f64) -> Result<Marks, XccyError> {
        self.require("replenish", SwapState::Active)?;
        self.top_up(time, party, amount)?;
        let rate = self.current_rate();
        self.log(time, "replenish", Some(&rate), format!("{party:?} +{amount}"));
        Ok(self.marks_at(&rate))
    }

    fn current_rate(&self) -> BigRational {
        self.last_tick
            .as_ref()
            .map(|(_, x)| x.clone())
            .unwrap_or_else(|| exact_decimal(self.agreement.initial_rate).unwrap_or_else(BigRational::zero))
    }

    /// Settles marks from margins and releases what is left.
    fn settle(
        &mut self,
        time: i64,
        rate: &BigRational,
        kind: SettlementKind,
        party: Option<Party>,
        fee: BigRational,
    ) -> Result<Settlement, XccyError> {
        let marks = self.marks_at(rate);
        let zero = BigRational::zero();
        let payer = if marks.adverse[0] > zero {
            Some(Party::A)
        } else if marks.adverse[1] > zero {
            Some(Party::B)
        } else {
            None
        };
        let (mut exposure, mut transferred) = (zero.clone(), zero.clone());
        if let Some(p) = payer {
            exposure = marks.adverse[idx(p)].clone();
            transferred = exposure.clone().min(self.margin[idx(p)].clone());
            self.ledger.transfer(
                time,
                "settle",
                Account::Contract,
                Account::Wallet(p.other()),
                p.home_token(),
                &transferred,
            )?;
            self.margin[idx(p)] -= &transferred;
        }
        for p in [Party::A, Party::B] {
            let rest = std::mem::replace(&mut self.margin[idx(p)], BigRational::zero());
            self.ledger.transfer(time, "release", Account::Contract, Account::Wallet(p), p.home_token(), &rest)?;
        }
        Ok(Settlement {
            kind,
            time,
            rate: rate.clone(),
            party,
            payer,
            shortfall: &exposure - &transferred,
            exposure,
            transferred,
            fee,
        })
    }

    fn finish(&mut self, s: Settlement, event: &str) {
        let note =
            format!("payer={:?} transferred={} shortfall={}", s.payer, to_f64(&s.transferred), to_f64(&s.shortfall));
        let rate = s.rate.clone();
        self.log(s.time, event, Some(&rate), note);
        self.settlement = Some(s);
    }

    /// Exit for the fixed fee, settled at the last observed rate.
    pub fn voluntary_terminate(&mut self, time: i64, party: Party) -> Result<Settlement, XccyError> {
        self.require("terminate", SwapState::Active)?;
        if let Some((previous, _)) = self.last_tick {
            if time < previous {
                return Err(XccyError::StaleTick { time, previous });
            }
        }
        let fee = self.exact.fee.clone();
        let before = self.ledger.clone();
        self.ledger.transfer(
            time,
            "fee",
            Account::Wallet(party),
            Account::Wallet(party.other()),
            party.home_token(),
            &fee,
        )?;
        let rate = self.current_rate();
        let s = match self.settle(time, &rate, SettlementKind::Voluntary, Some(party), fee) {
            Ok(s) => s,
            Err(e) => {
                self.ledger = before;
                return Err(e);
            }
        };
        self.state = SwapState::TerminatedVoluntary(party);
        self.finish(s.clone(), "terminate");
        Ok(s)
    }

    /// Reverses the notional exchange at the final rate and releases margins.
    pub fn mature(&mut self, time: i64) -> Result<Settlement, XccyError> {
        self.require("mature", SwapState::Active)?;
        if time < self.agreement.maturity {
            return Err(XccyError::NotMatured { time, maturity: self.agreement.maturity });
        }
        let (wa, wb) = (Account::Wallet(Party::A), Account::Wallet(Party::B));
        let mut next = self.ledger.clone();
        next.transfer(time, "mature", wa, wb, Token::Beta, &self.exact.reversal_b)?;
        next.transfer(time, "mature", wb, wa, Token::Alpha, &self.exact.notional_a)?;
        for p in [Party::A, Party::B] {
            next.transfer(
                time,
                "release",
                Account::Contract,
                Account::Wallet(p),
                p.home_token(),
                &self.margin[idx(p)],
            )?;
        }
        self.ledger = next;
        self.margin = [BigRational::zero(), BigRational::zero()];
        self.state = SwapState::Matured;
        let zero = BigRational::zero();
        let s = Settlement {
            kind: SettlementKind::Maturity,
            time,
            rate: self.exact.x_final.clone(),
            party: None,
            payer: None,
            exposure: zero.clone(),
            transferred: zero.clone(),
            shortfall: zero.clone(),
            fee: zero,
        };
        self.finish(s.clone(), "mature");
        Ok(s)
    }

    fn leg_rate(leg: &LegSpec, period: &Period) -> Result<BigRational, XccyError> {
        let base = match &leg.rate {
            LegRate::Fixed { fixed } => *fixed,
            LegRate::Floating { index } => {
                *period.fixings.get(index).ok_or_else(|| XccyError::MissingFixing(index.clone()))?
            }
        };
        let base = exact_decimal(base).ok_or(XccyError::NotFinite("leg rate"))?;
        Ok(base + exact_decimal(leg.spread).ok_or(XccyError::NotFinite("leg spread"))?)
    }

    /// Pays both interest legs for a period of `days`.
    pub fn accrue_legs(&mut self, time: i64, period: &Period) -> Result<Vec<LegFlow>, XccyError> {
        self.require("accrue", SwapState::Active)?;
        let accrual = BigRational::new(BigInt::from(period.days), BigInt::from(DAYS_PER_YEAR));
        let flows = vec![
            {
                let rate = Self::leg_rate(&self.agreement.leg_a, period)?;
                LegFlow { payer: Party::A, token: Token::Beta, amount: &self.exact.notional_b * &rate * &accrual, rate }
            },
            {
                let rate = Self::leg_rate(&self.agreement.leg_b, period)?;
                LegFlow {
                    payer: Party::B,
                    token: Token::Alpha,
                    amount: &self.exact.notional_a * &rate * &accrual,
                    rate,
                }
            },
        ];
        let mut next = self.ledger.clone();
        for f in &flows {
            let (from, to) = (Account::Wallet(f.payer), Account::Wallet(f.payer.other()));
            if f.amount >= BigRational::zero() {
                next.transfer(time, "leg", from, to, f.token, &f.amount)?;
            } else {
                next.transfer(time, "leg", to, from, f.token, &-f.amount.clone())?;
            }
        }
        self.ledger = next;
        let note =
            format!("days={} a_pays={} b_pays={}", period.days, to_f64(&flows[0].amount), to_f64(&flows[1].amount));
        let rate = self.current_rate();
        self.log(time, "accrue", Some(&rate), note);
        Ok(flows)
    }
}
