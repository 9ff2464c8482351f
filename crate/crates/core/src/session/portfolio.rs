use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::event::Side;
use crate::simkit::{Authenticity, Scenario, Stock, StockId};
use crate::Money;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TradeError {
    #[error("share count must be at least 1")]
    ZeroShares,
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds { needed: Money, available: Money },
    #[error("insufficient shares of {stock}: want {wanted}, hold {held}")]
    InsufficientShares { stock: StockId, wanted: u64, held: u64 },
    #[error("stock {0} has been delisted")]
    StockDelisted(StockId),
    #[error("no quote for {stock} at tick {tick}")]
    NoQuote { stock: StockId, tick: u32 },
    #[error("order value overflows")]
    Overflow,
}

impl TradeError {
    pub fn code(&self) -> &'static str {
        match self {
            TradeError::ZeroShares => "ValidationError",
            TradeError::InsufficientFunds { .. } => "InsufficientFunds",
            TradeError::InsufficientShares { .. } => "InsufficientShares",
            TradeError::StockDelisted(_) => "StockDelisted",
            TradeError::NoQuote { .. } => "NoQuote",
            TradeError::Overflow => "ValidationError",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub shares: u64,
    /// Total cost of the shares still held.
    pub cost_basis: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portfolio {
    pub cash: Money,
    pub positions: BTreeMap<StockId, Position>,
    pub xp: u64,
    pub level: u32,
}

/// Result of an executed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fill {
    pub stock_id: StockId,
    pub authenticity: Authenticity,
    pub side: Side,
    pub shares: u64,
    pub price: Money,
    pub cash_delta: Money,
    pub realized_pnl: Money,
}

/// Execution price for a listing at `tick`: the quote rounded to cents, never below one cent.
pub fn quote(stock: &Stock, tick: u32) -> Result<Money, TradeError> {
    if stock.is_delisted_at(tick) {
        return Err(TradeError::StockDelisted(stock.id.clone()));
    }
    let price = stock.price_at(tick).ok_or_else(|| TradeError::NoQuote { stock: stock.id.clone(), tick })?;
    Ok(Money::from_quote(price).max(Money::from_cents(1)))
}

impl Portfolio {
    pub fn new(cash: Money, xp: u64, xp_per_level: u64) -> Self {
        Self { cash, positions: BTreeMap::new(), xp, level: level_for(xp, xp_per_level) }
    }

    pub fn for_scenario(scenario: &Scenario, xp_per_level: u64) -> Self {
        Self::new(scenario.initial_cash, scenario.initial_xp, xp_per_level)
    }

    pub fn shares(&self, stock: &StockId) -> u64 {
        self.positions.get(stock).map_or(0, |p| p.shares)
    }

    /// Fills an order at the tick's quote with no fees.
    pub fn execute_trade(&mut self, stock: &Stock, side: Side, shares: u64, tick: u32) -> Result<Fill, TradeError> {
        if shares == 0 {
            return Err(TradeError::ZeroShares);
        }
        let price = quote(stock, tick)?;
        let notional = price.checked_mul(shares).ok_or(TradeError::Overflow)?;
        let (cash_delta, realized_pnl) = match side {
            Side::Buy => {
                if notional > self.cash {
                    return Err(TradeError::InsufficientFunds { needed: notional, available: self.cash });
                }
                let pos = self.positions.entry(stock.id.clone()).or_default();
                pos.shares += shares;
                pos.cost_basis += notional;
                (-notional, Money::ZERO)
            }
            Side::Sell => {
                let held = self.shares(&stock.id);
                if held < shares {
                    return Err(TradeError::InsufficientShares { stock: stock.id.clone(), wanted: shares, held });
                }
                let pos = self.positions.get_mut(&stock.id).expect("held > 0");
                let released = if shares == held {
                    pos.cost_basis
                } else {
                    let c = i128::from(pos.cost_basis.cents()) * i128::from(shares) / i128::from(held);
                    Money::from_cents(c as i64)
                };
                pos.shares -= shares;
                pos.cost_basis -= released;
                if pos.shares == 0 {
                    self.positions.remove(&stock.id);
                }
                (notional, notional - released)
            }
        };
        self.cash += cash_delta;
        Ok(Fill {
            stock_id: stock.id.clone(),
            authenticity: stock.authenticity,
            side,
            shares,
            price,
            cash_delta,
            realized_pnl,
        })
    }

    /// Market value of the holdings at `tick`; delisted fakes are worth nothing.
    pub fn holdings_value(&self, scenario: &Scenario, tick: u32) -> Money {
        self.positions
            .iter()
            .map(|(id, pos)| {
                let px = scenario
                    .stock(id)
                    .and_then(|s| s.price_at(tick.min(scenario.last_tick())))
                    .map_or(Money::ZERO, Money::from_quote);
                px.checked_mul(pos.shares).unwrap_or(Money::ZERO)
            })
            .sum()
    }

    pub fn value(&self, scenario: &Scenario, tick: u32) -> Money {
        self.cash + self.holdings_value(scenario, tick)
    }
}

pub fn level_for(xp: u64, xp_per_level: u64) -> u32 {
    1 + (xp / xp_per_level.max(1)) as u32
}
