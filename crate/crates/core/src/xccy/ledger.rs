use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Party, Token, XccyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Account {
    Wallet(Party),
    Contract,
}

/// Starting balances held outside the contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wallets {
    pub a_alpha: f64,
    pub a_beta: f64,
    pub b_alpha: f64,
    pub b_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub seq: usize,
    pub time: i64,
    pub event: String,
    pub from: Account,
    pub to: Account,
    pub token: Token,
    #[serde(skip)]
    pub amount: BigRational,
}

impl AuditEntry {
    pub fn amount_f64(&self) -> f64 {
        self.amount.to_f64().unwrap_or(f64::NAN)
    }
}

/// Balances per account and token, with every movement recorded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ledger {
    balances: BTreeMap<(Account, Token), BigRational>,
    audit: Vec<AuditEntry>,
}

impl Ledger {
    pub fn with_balances(initial: impl IntoIterator<Item = (Account, Token, BigRational)>) -> Self {
        let mut l = Ledger::default();
        for (acct, token, amt) in initial {
            *l.balances.entry((acct, token)).or_insert_with(BigRational::zero) += amt;
        }
        l
    }

    pub fn balance(&self, account: Account, token: Token) -> BigRational {
        self.balances.get(&(account, token)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self, token: Token) -> BigRational {
        self.balances.iter().filter(|((_, t), _)| *t == token).fold(BigRational::zero(), |acc, (_, v)| acc + v)
    }

    pub fn balances(&self) -> impl Iterator<Item = (Account, Token, &BigRational)> {
        self.balances.iter().map(|((a, t), v)| (*a, *t, v))
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Moves `amount` (which must be non-negative) between accounts; zero
    /// amounts are not recorded.
    pub fn transfer(
        &mut self,
        time: i64,
        event: &str,
        from: Account,
        to: Account,
        token: Token,
        amount: &BigRational,
    ) -> Result<(), XccyError> {
        debug_assert!(*amount >= BigRational::zero());
        if amount.is_zero() {
            return Ok(());
        }
        let available = self.balance(from, token);
        if available < *amount {
            return Err(XccyError::InsufficientFunds {
                account: from,
                token,
                needed: amount.to_string(),
                available: available.to_string(),
            });
        }
        *self.balances.entry((from, token)).or_insert_with(BigRational::zero) -= amount;
        *self.balances.entry((to, token)).or_insert_with(BigRational::zero) += amount;
        self.audit.push(AuditEntry {
            seq: self.audit.len(),
            time,
            event: event.to_string(),
            from,
            to,
            token,
            amount: amount.clone(),
        });
        Ok(())
    }
}
