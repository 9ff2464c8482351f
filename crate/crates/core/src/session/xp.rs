use serde::{Deserialize, Serialize};

use super::event::{EventKind, SessionEvent};
use super::portfolio::{level_for, Portfolio};
use crate::simkit::Scenario;

/// Experience-point rules. Defaults: +50 for a correct fraud report, -10 for a false
/// one, +10 for a profitable sale, one level per 500 XP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XpRules {
    pub correct_report: u64,
    pub false_report: u64,
    pub profitable_sell: u64,
    pub xp_per_level: u64,
}

impl Default for XpRules {
    fn default() -> Self {
        Self { correct_report: 50, false_report: 10, profitable_sell: 10, xp_per_level: 500 }
    }
}

pub fn award_xp(portfolio: &mut Portfolio, event: &SessionEvent, scenario: &Scenario, rules: &XpRules) {
    match &event.kind {
        EventKind::ReportFraud { stock_id, authenticity } => {
            let auth = scenario.stock(stock_id).map_or(*authenticity, |s| s.authenticity);
            if auth.is_scam() {
                portfolio.xp += rules.correct_report;
            } else {
                portfolio.xp = portfolio.xp.saturating_sub(rules.false_report);
            }
        }
        EventKind::Sell(trade) if trade.realized_pnl.cents() > 0 => {
            portfolio.xp += rules.profitable_sell;
        }
        _ => {}
    }
    portfolio.level = level_for(portfolio.xp, rules.xp_per_level);
}
