//! Replays a pool scenario: initial pool, then an ordered list of
//! liquidity, swap and external-price events.
//!
//! Scenario schema (TOML or JSON):
//!
//! ```toml
//! [pool]
//! reserve_x = 1000.0
//! reserve_y = 1000.0
//! fee = 0.003          # 0.0005, 0.003, 0.01 or any value in [0, 1)
//! gas_cost = 0.0       # optional, token-y units per arbitrage
//! price_x = 1.0        # numeraire price of x at creation
//! price_y = 1.0        # numeraire price of y at creation
//! owner = "genesis"    # optional name of the creator's position
//!
//! [[events]]
//! kind = "add"         # dy optional: derived from the pool ratio
//! position = "alice"
//! dx = 100.0
//!
//! [[events]]
//! kind = "swap_x"      # or "swap_y"
//! amount = 25.0
//!
//! [[events]]
//! kind = "price"       # external tick; the pool is arbitraged to px / py
//! price_x = 1.2
//! price_y = 1.0
//!
//! [[events]]
//! kind = "remove"      # redeem a fraction of the position's shares
//! position = "alice"
//! fraction = 0.5
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{absolute_impermanent_pnl, AmmError, LpPosition, Pool, SwapReceipt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub reserve_x: f64,
    pub reserve_y: f64,
    pub fee: f64,
    #[serde(default)]
    pub gas_cost: f64,
    #[serde(default = "one")]
    pub price_x: f64,
    #[serde(default = "one")]
    pub price_y: f64,
    #[serde(default = "genesis")]
    pub owner: String,
}

fn one() -> f64 {
    1.0
}

fn genesis() -> String {
    "genesis".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PoolEvent {
    Add {
        position: String,
        dx: f64,
        #[serde(default)]
        dy: Option<f64>,
    },
    Remove {
        position: String,
        fraction: f64,
    },
    SwapX {
        amount: f64,
    },
    SwapY {
        amount: f64,
    },
    Price {
        price_x: f64,
        price_y: f64,
    },
}

impl PoolEvent {
    fn label(&self) -> &'static str {
        match self {
            PoolEvent::Add { .. } => "add",
            PoolEvent::Remove { .. } => "remove",
            PoolEvent::SwapX { .. } => "swap_x",
            PoolEvent::SwapY { .. } => "swap_y",
            PoolEvent::Price { .. } => "price",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolScenario {
    pub pool: PoolConfig,
    #[serde(default)]
    pub events: Vec<PoolEvent>,
}

/// Pool state after one event. Column order is the report's CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRow {
    pub step: usize,
    pub event: String,
    pub amount_in: f64,
    pub amount_out: f64,
    pub fee_paid: f64,
    pub reserve_x: f64,
    pub reserve_y: f64,
    pub spot_price: f64,
    pub total_shares: f64,
    pub product: f64,
    pub cumulative_fees_x: f64,
    pub cumulative_fees_y: f64,
    pub price_x: f64,
    pub price_y: f64,
}

/// One open position's valuation after one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionRow {
    pub step: usize,
    pub position: String,
    pub shares: f64,
    pub claim_x: f64,
    pub claim_y: f64,
    pub claim_value: f64,
    pub hold_value: f64,
    pub impermanent_pnl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub states: Vec<StateRow>,
    pub positions: Vec<PositionRow>,
    pub pool: Pool,
}

struct Runner {
    pool: Pool,
    positions: BTreeMap<String, LpPosition>,
    prices: (f64, f64),
    out: ScenarioRun,
}

impl Runner {
    fn record(&mut self, step: usize, event: &str, receipt: Option<&SwapReceipt<f64>>) {
        let p = &self.pool;
        let (fx, fy) = p.cumulative_fees();
        self.out.states.push(StateRow {
            step,
            event: event.to_string(),
            amount_in: receipt.map_or(0.0, |r| r.amount_in),
            amount_out: receipt.map_or(0.0, |r| r.amount_out),
            fee_paid: receipt.map_or(0.0, |r| r.fee_paid),
            reserve_x: *p.reserve_x(),
            reserve_y: *p.reserve_y(),
            spot_price: if p.is_live() { p.spot_price() } else { 0.0 },
            total_shares: *p.total_shares(),
            product: p.product(),
            cumulative_fees_x: *fx,
            cumulative_fees_y: *fy,
            price_x: self.prices.0,
            price_y: self.prices.1,
        });
        if !p.is_live() {
            return;
        }
        for (name, pos) in &self.positions {
            if pos.shares <= 0.0 {
                continue;
            }
            let Ok((cx, cy)) = pos.claim(p) else { continue };
            let claim_value = cx * self.prices.0 + cy * self.prices.1;
            let hold_value = pos.entry_x * self.prices.0 + pos.entry_y * self.prices.1;
            self.out.positions.push(PositionRow {
                step,
                position: name.clone(),
                shares: pos.shares,
                claim_x: cx,
                claim_y: cy,
                claim_value,
                hold_value,
                impermanent_pnl: absolute_impermanent_pnl(pos, p, self.prices).unwrap_or(0.0),
            });
        }
    }

    fn apply(&mut self, event: &PoolEvent) -> Result<Option<SwapReceipt<f64>>, AmmError> {
        match event {
            PoolEvent::Add { position, dx, dy } => {
                let dy = dy.unwrap_or_else(|| dx * self.pool.spot_price());
                let opened = LpPosition::open(&mut self.pool, *dx, dy, self.prices)?;
                match self.positions.get_mut(position) {
                    Some(pos) => {
                        pos.shares += opened.shares;
                        pos.entry_x += opened.entry_x;
                        pos.entry_y += opened.entry_y;
                    }
                    None => {
                        self.positions.insert(position.clone(), opened);
                    }
                }
                Ok(None)
            }
            PoolEvent::Remove { position, fraction } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(AmmError::NonPositive("remove fraction in [0, 1]"));
                }
                if !self.positions.contains_key(position) {
                    return Err(AmmError::UnknownPosition(position.clone()));
                }
                let last_holder = self.positions.values().filter(|p| p.shares > 0.0).count() == 1;
                let pos = self.positions.get_mut(position).expect("present");
                let shares = match (*fraction == 1.0, last_holder) {
                    // Redeem the exact remaining supply so the pool closes cleanly.
                    (true, true) => *self.pool.total_shares(),
                    (true, false) => pos.shares,
                    _ => pos.shares * fraction,
                };
                self.pool.remove_liquidity(shares.min(*self.pool.total_shares()))?;
                let keep = 1.0 - fraction;
                pos.shares = if *fraction == 1.0 { 0.0 } else { pos.shares - shares };
                pos.entry_x *= keep;
                pos.entry_y *= keep;
                Ok(None)
            }
            PoolEvent::SwapX { amount } => self.pool.swap_x_for_y(*amount).map(Some),
            PoolEvent::SwapY { amount } => self.pool.swap_y_for_x(*amount).map(Some),
            PoolEvent::Price { price_x, price_y } => {
                if !(*price_x > 0.0 && *price_y > 0.0) {
                    return Err(AmmError::NonPositive("numeraire price"));
                }
                self.prices = (*price_x, *price_y);
                self.pool.arbitrage_to_price(price_x / price_y)
            }
        }
    }
}

/// Replays the scenario, valuing every open position after each event.
/// Step 0 is the freshly created pool.
pub fn run_scenario(scenario: &PoolScenario) -> Result<ScenarioRun, AmmError> {
    let cfg = &scenario.pool;
    let pool = Pool::create(cfg.reserve_x, cfg.reserve_y, cfg.fee)?.with_gas_cost(cfg.gas_cost);
    let prices = (cfg.price_x, cfg.price_y);
    let mut positions = BTreeMap::new();
    positions.insert(cfg.owner.clone(), LpPosition::genesis(&pool, prices));
    let mut runner = Runner {
        pool: pool.clone(),
        positions,
        prices,
        out: ScenarioRun { states: Vec::new(), positions: Vec::new(), pool },
    };
    runner.record(0, "create", None);
    for (i, event) in scenario.events.iter().enumerate() {
        let receipt = runner.apply(event).map_err(|e| AmmError::Event { index: i + 1, source: Box::new(e) })?;
        runner.record(i + 1, event.label(), receipt.as_ref());
    }
    runner.out.pool = runner.pool;
    Ok(runner.out)
}
