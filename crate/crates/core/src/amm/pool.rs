use serde::{Deserialize, Serialize};

use super::scalar::Amount;
use super::AmmError;

/// Relative tolerance on the deposit ratio for [`Pool::add_liquidity`].
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Fee tiers offered by the major constant-product venues.
pub const FEE_TIERS: [f64; 3] = [0.0005, 0.003, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapDirection {
    XForY,
    YForX,
}

/// Outcome of one swap. Prices are quoted as token y per token x.
///
/// `execution_price` is measured on the post-fee input (the amount that
/// actually enters the curve), so it always lies between the spot prices
/// before and after the trade.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapReceipt<T> {
    pub direction: SwapDirection,
    pub amount_in: T,
    pub amount_out: T,
    pub fee_paid: T,
    pub execution_price: T,
    pub spot_price_before: T,
    pub spot_price_after: T,
}

/// Two-token constant-product pool.
///
/// Fees stay in the reserves, so the product `x y` grows with every swap
/// and liquidity providers collect them on exit. A pool whose last share
/// has been redeemed is dead and rejects every further operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool<T = f64> {
    reserve_x: T,
    reserve_y: T,
    fee: T,
    total_shares: T,
    cumulative_fees_x: T,
    cumulative_fees_y: T,
    gas_cost: f64,
}

impl<T: Amount> Pool<T> {
    /// Opens a pool; the creator receives `sqrt(x0 y0)` shares.
    pub fn create(x0: T, y0: T, fee: T) -> Result<Self, AmmError> {
        if !(x0 > T::zero() && y0 > T::zero()) {
            return Err(AmmError::NonPositive("initial reserve"));
        }
        if !(fee >= T::zero() && fee < T::one()) {
            return Err(AmmError::BadFee(fee.to_f64()));
        }
        let total_shares = (x0.clone() * y0.clone()).sqrt();
        Ok(Self {
            reserve_x: x0,
            reserve_y: y0,
            fee,
            total_shares,
            cumulative_fees_x: T::zero(),
            cumulative_fees_y: T::zero(),
            gas_cost: 0.0,
        })
    }

    /// Fixed per-transaction friction, in units of token y, that an
    /// arbitrage must clear before it is worth executing.
    pub fn with_gas_cost(mut self, gas_cost: f64) -> Self {
        self.gas_cost = gas_cost.max(0.0);
        self
    }

    pub fn reserve_x(&self) -> &T {
        &self.reserve_x
    }

    pub fn reserve_y(&self) -> &T {
        &self.reserve_y
    }

    pub fn fee(&self) -> &T {
        &self.fee
    }

    pub fn total_shares(&self) -> &T {
        &self.total_shares
    }

    pub fn cumulative_fees(&self) -> (&T, &T) {
        (&self.cumulative_fees_x, &self.cumulative_fees_y)
    }

    pub fn gas_cost(&self) -> f64 {
        self.gas_cost
    }

    pub fn is_live(&self) -> bool {
        self.total_shares > T::zero()
    }

    /// `x y`.
    pub fn product(&self) -> T {
        self.reserve_x.clone() * self.reserve_y.clone()
    }

    /// Marginal fee-free price, token y per token x.
    pub fn spot_price(&self) -> T {
        self.reserve_y.clone() / self.reserve_x.clone()
    }

    fn ensure_live(&self) -> Result<(), AmmError> {
        if self.is_live() {
            Ok(())
        } else {
            Err(AmmError::Dead)
        }
    }

    /// Deposits `(dx, dy)` at the pool ratio and returns the shares minted.
    pub fn add_liquidity(&mut self, dx: T, dy: T) -> Result<T, AmmError> {
        self.ensure_live()?;
        if dx < T::zero() || dy < T::zero() {
            return Err(AmmError::NonPositive("deposit"));
        }
        if dx.is_zero() && dy.is_zero() {
            return Ok(T::zero());
        }
        // dx / dy == x / y, cross-multiplied.
        let lhs = dx.clone() * self.reserve_y.clone();
        let rhs = dy.clone() * self.reserve_x.clone();
        let tol = T::from_f64(RATIO_TOLERANCE).unwrap_or_else(T::zero);
        if (lhs.clone() - rhs.clone()).abs() > tol * lhs.clone().max_of(rhs) {
            return Err(AmmError::RatioMismatch {
                deposit: dx.to_f64() / dy.to_f64(),
                pool: self.reserve_x.to_f64() / self.reserve_y.to_f64(),
            });
        }
        let minted = self.total_shares.clone() * dx.clone() / self.reserve_x.clone();
        self.reserve_x = self.reserve_x.clone() + dx;
        self.reserve_y = self.reserve_y.clone() + dy;
        self.total_shares = self.total_shares.clone() + minted.clone();
        Ok(minted)
    }

    /// Burns `shares` and returns the pro-rata slice of both reserves.
    pub fn remove_liquidity(&mut self, shares: T) -> Result<(T, T), AmmError> {
        self.ensure_live()?;
        if shares < T::zero() {
            return Err(AmmError::NonPositive("shares"));
        }
        if shares > self.total_shares {
            return Err(AmmError::InsufficientShares {
                requested: shares.to_f64(),
                supply: self.total_shares.to_f64(),
            });
        }
        if shares.is_zero() {
            return Ok((T::zero(), T::zero()));
        }
        if shares == self.total_shares {
            let out =
                (std::mem::replace(&mut self.reserve_x, T::zero()), std::mem::replace(&mut self.reserve_y, T::zero()));
            self.total_shares = T::zero();
            return Ok(out);
        }
        let dx = self.reserve_x.clone() * shares.clone() / self.total_shares.clone();
        let dy = self.reserve_y.clone() * shares.clone() / self.total_shares.clone();
        self.reserve_x = self.reserve_x.clone() - dx.clone();
        self.reserve_y = self.reserve_y.clone() - dy.clone();
        self.total_shares = self.total_shares.clone() - shares;
        Ok((dx, dy))
    }

    /// Sells `dx` of token x for token y.
    pub fn swap_x_for_y(&mut self, dx: T) -> Result<SwapReceipt<T>, AmmError> {
        self.swap(SwapDirection::XForY, dx)
    }

    /// Sells `dy` of token y for token x.
    pub fn swap_y_for_x(&mut self, dy: T) -> Result<SwapReceipt<T>, AmmError> {
        self.swap(SwapDirection::YForX, dy)
    }

    /// Output `out = R_out - k / (R_in + amount (1 - fee))`, evaluated as
    /// `R_out a / (R_in + a)` with `a = amount (1 - fee)` to avoid
    /// cancellation on small trades. The full `amount` is added to the input
    /// reserve.
    pub fn swap(&mut self, direction: SwapDirection, amount: T) -> Result<SwapReceipt<T>, AmmError> {
        self.ensure_live()?;
        if !(amount > T::zero()) {
            return Err(AmmError::NonPositive("swap input"));
        }
        let spot_before = self.spot_price();
        let fee_paid = amount.clone() * self.fee.clone();
        let effective = amount.clone() - fee_paid.clone();
        let (r_in, r_out) = match direction {
            SwapDirection::XForY => (&mut self.reserve_x, &mut self.reserve_y),
            SwapDirection::YForX => (&mut self.reserve_y, &mut self.reserve_x),
        };
        let amount_out = r_out.clone() * effective.clone() / (r_in.clone() + effective.clone());
        *r_in = r_in.clone() + amount.clone();
        *r_out = r_out.clone() - amount_out.clone();
        let execution_price = match direction {
            SwapDirection::XForY => {
                self.cumulative_fees_x = self.cumulative_fees_x.clone() + fee_paid.clone();
                amount_out.clone() / effective
            }
            SwapDirection::YForX => {
                self.cumulative_fees_y = self.cumulative_fees_y.clone() + fee_paid.clone();
                effective / amount_out.clone()
            }
        };
        Ok(SwapReceipt {
            direction,
            amount_in: amount,
            amount_out,
            fee_paid,
            execution_price,
            spot_price_before: spot_before,
            spot_price_after: self.spot_price(),
        })
    }

    /// `(spot (1 - fee), spot / (1 - fee))`: external prices inside this
    /// band admit no profitable single swap.
    pub fn no_arbitrage_band(&self) -> (T, T) {
        let keep = T::one() - self.fee.clone();
        let spot = self.spot_price();
        (spot.clone() * keep.clone(), spot / keep)
    }

    /// Executes the profit-maximizing swap against an external venue quoting
    /// `external_price` (token y per token x), or nothing when that price
    /// sits inside the no-arbitrage band or the profit does not cover gas.
    ///
    /// Selling `dx` yields marginal output `(1-f) k / (x + (1-f) dx)^2`;
    /// setting it equal to the external price gives
    /// `dx = (sqrt((1-f) k / P) - x) / (1-f)`, and symmetrically for y.
    pub fn arbitrage_to_price(&mut self, external_price: T) -> Result<Option<SwapReceipt<T>>, AmmError> {
        self.ensure_live()?;
        if !(external_price > T::zero()) {
            return Err(AmmError::NonPositive("external price"));
        }
        let (lo, hi) = self.no_arbitrage_band();
        let keep = T::one() - self.fee.clone();
        let k = self.product();
        let (direction, amount) = if external_price < lo {
            let target = (keep.clone() * k / external_price.clone()).sqrt();
            (SwapDirection::XForY, (target - self.reserve_x.clone()) / keep)
        } else if external_price > hi {
            let target = (keep.clone() * k * external_price.clone()).sqrt();
            (SwapDirection::YForX, (target - self.reserve_y.clone()) / keep)
        } else {
            return Ok(None);
        };
        if !(amount > T::zero()) {
            return Ok(None);
        }
        let mut trial = self.clone();
        let receipt = trial.swap(direction, amount)?;
        // Profit in token y at the external price.
        let p = external_price.to_f64();
        let profit = match direction {
            SwapDirection::XForY => receipt.amount_out.to_f64() - p * receipt.amount_in.to_f64(),
            SwapDirection::YForX => p * receipt.amount_out.to_f64() - receipt.amount_in.to_f64(),
        };
        if self.gas_cost > 0.0 && profit <= self.gas_cost {
            return Ok(None);
        }
        *self = trial;
        Ok(Some(receipt))
    }
}

trait MaxOf {
    fn max_of(self, other: Self) -> Self;
}

impl<T: PartialOrd> MaxOf for T {
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// An LP's stake: shares held plus what was deposited for them.
#[derive(Debug, Clone, PartialEq)]
pub struct LpPosition<T = f64> {
    pub shares: T,
    pub entry_x: T,
    pub entry_y: T,
    /// Numeraire prices of (x, y) when the position was opened.
    pub entry_prices: (f64, f64),
}

impl<T: Amount> LpPosition<T> {
    /// Deposits into `pool` and records the resulting position.
    pub fn open(pool: &mut Pool<T>, dx: T, dy: T, prices: (f64, f64)) -> Result<Self, AmmError> {
        let shares = pool.add_liquidity(dx.clone(), dy.clone())?;
        Ok(Self { shares, entry_x: dx, entry_y: dy, entry_prices: prices })
    }

    /// The creator's position in a freshly created pool.
    pub fn genesis(pool: &Pool<T>, prices: (f64, f64)) -> Self {
        Self {
            shares: pool.total_shares().clone(),
            entry_x: pool.reserve_x().clone(),
            entry_y: pool.reserve_y().clone(),
            entry_prices: prices,
        }
    }

    /// Pro-rata claim on the pool's reserves.
    pub fn claim(&self, pool: &Pool<T>) -> Result<(T, T), AmmError> {
        pool.ensure_live()?;
        let frac = self.shares.clone() / pool.total_shares().clone();
        Ok((pool.reserve_x().clone() * frac.clone(), pool.reserve_y().clone() * frac))
    }
}

/// Value of the pool claim minus the value of holding the deposited tokens,
/// both at `exit_prices`. Fees sit in the reserves, so this is net of fees.
pub fn absolute_impermanent_pnl<T: Amount>(
    position: &LpPosition<T>,
    pool: &Pool<T>,
    exit_prices: (f64, f64),
) -> Result<f64, AmmError> {
    let (cx, cy) = position.claim(pool)?;
    let (px, py) = exit_prices;
    let lp = cx.to_f64() * px + cy.to_f64() * py;
    let hold = position.entry_x.to_f64() * px + position.entry_y.to_f64() * py;
    Ok(lp - hold)
}
