//! Event-sourced session state: portfolio and footprint are folds over the log.

use serde::{Deserialize, Serialize};

use super::event::{EventKind, Page, SessionEvent, SessionId, Side, TradePayload};
use super::footprint::{DigitalFootprint, FootprintFolder, TelemetryError};
use super::portfolio::{Fill, Portfolio, TradeError};
use super::xp::{award_xp, XpRules};
use crate::simkit::{ArticleId, MessageId, Scenario, StockId};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Trade(#[from] TradeError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("event log does not replay: {0}")]
    Corrupt(String),
}

/// Page reference as sent by a client; the server resolves stock authenticity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PageRef {
    Market,
    Portfolio,
    News,
    Analytics,
    Chat,
    StockDetail { stock_id: StockId },
}

/// Telemetry event as submitted by the web client or a bot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientEventKind {
    PageEnter { page: PageRef },
    PageLeave { page: PageRef },
    ReadArticleStart { article_id: ArticleId },
    ReadArticleEnd { article_id: ArticleId },
    ChatReply { message_id: MessageId, option: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEvent {
    pub wall_time: f64,
    #[serde(flatten)]
    pub kind: ClientEventKind,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub session_id: SessionId,
    pub age: u32,
    pub portfolio: Portfolio,
    pub current_tick: u32,
    rules: XpRules,
    folder: FootprintFolder,
    events: Vec<SessionEvent>,
}

impl SessionState {
    pub fn new(session_id: SessionId, age: u32, scenario: &Scenario, rules: XpRules) -> Self {
        Self {
            session_id,
            age,
            portfolio: Portfolio::for_scenario(scenario, rules.xp_per_level),
            current_tick: 0,
            rules,
            folder: FootprintFolder::new(age),
            events: Vec::new(),
        }
    }

    /// Rebuilds a session from its log, re-executing every trade.
    pub fn replay(
        session_id: SessionId,
        age: u32,
        scenario: &Scenario,
        rules: XpRules,
        events: &[SessionEvent],
    ) -> Result<Self, SessionError> {
        let mut state = Self::new(session_id, age, scenario, rules);
        for e in events {
            state.apply_logged(scenario, e)?;
        }
        Ok(state)
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn footprint(&self) -> DigitalFootprint {
        self.folder.snapshot()
    }

    pub fn rules(&self) -> &XpRules {
        &self.rules
    }

    fn last_wall_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.wall_time)
    }

    fn check_wall_time(&self, wall_time: f64) -> Result<(), SessionError> {
        if !wall_time.is_finite() || wall_time < 0.0 {
            return Err(SessionError::Validation(format!("wall_time {wall_time} is not a valid timestamp")));
        }
        if wall_time < self.last_wall_time() {
            return Err(SessionError::Validation(format!(
                "wall_time {wall_time} precedes the previous event ({})",
                self.last_wall_time()
            )));
        }
        Ok(())
    }

    fn push(&mut self, scenario: &Scenario, kind: EventKind, wall_time: f64) -> &SessionEvent {
        let event = SessionEvent {
            id: self.events.len() as u64,
            session_id: self.session_id.clone(),
            tick: self.current_tick,
            wall_time,
            kind,
        };
        award_xp(&mut self.portfolio, &event, scenario, &self.rules);
        self.folder.push(&event);
        self.events.push(event);
        self.events.last().expect("just pushed")
    }

    pub fn advance(&mut self, ticks: u32, scenario: &Scenario) -> u32 {
        self.current_tick = (self.current_tick + ticks).min(scenario.last_tick());
        self.current_tick
    }

    pub fn trade(
        &mut self,
        scenario: &Scenario,
        stock_id: &StockId,
        side: Side,
        shares: u64,
        wall_time: f64,
    ) -> Result<(Fill, &SessionEvent), SessionError> {
        self.check_wall_time(wall_time)?;
        let stock = scenario
            .stock(stock_id)
            .ok_or_else(|| SessionError::Validation(format!("unknown stock {stock_id}")))?;
        let fill = self.portfolio.execute_trade(stock, side, shares, self.current_tick)?;
        let payload = TradePayload {
            stock_id: fill.stock_id.clone(),
            authenticity: fill.authenticity,
            shares,
            price: fill.price,
            realized_pnl: fill.realized_pnl,
        };
        let kind = match side {
            Side::Buy => EventKind::Buy(payload),
            Side::Sell => EventKind::Sell(payload),
        };
        let event = self.push(scenario, kind, wall_time);
        Ok((fill, event))
    }

    pub fn report_fraud(
        &mut self,
        scenario: &Scenario,
        stock_id: &StockId,
        wall_time: f64,
    ) -> Result<&SessionEvent, SessionError> {
        self.check_wall_time(wall_time)?;
        let stock = scenario
            .stock(stock_id)
            .ok_or_else(|| SessionError::Validation(format!("unknown stock {stock_id}")))?;
        let kind = EventKind::ReportFraud { stock_id: stock.id.clone(), authenticity: stock.authenticity };
        Ok(self.push(scenario, kind, wall_time))
    }

    /// Resolves a client event against the scenario, checks nesting and appends it.
    pub fn record(&mut self, scenario: &Scenario, event: &ClientEvent) -> Result<&SessionEvent, SessionError> {
        self.check_wall_time(event.wall_time)?;
        let kind = self.resolve(scenario, &event.kind)?;
        let probe = SessionEvent {
            id: self.events.len() as u64,
            session_id: self.session_id.clone(),
            tick: self.current_tick,
            wall_time: event.wall_time,
            kind,
        };
        if !self.folder.accepts(&probe) {
            return Err(TelemetryError::Unmatched { orphan_ids: vec![probe.id] }.into());
        }
        Ok(self.push(scenario, probe.kind, event.wall_time))
    }

    /// Validates a batch as a unit: either every event is appended or none is.
    pub fn record_batch(&mut self, scenario: &Scenario, batch: &[ClientEvent]) -> Result<usize, SessionError> {
        let mut trial = self.clone();
        for e in batch {
            trial.record(scenario, e)?;
        }
        *self = trial;
        Ok(batch.len())
    }

    fn resolve(&self, scenario: &Scenario, kind: &ClientEventKind) -> Result<EventKind, SessionError> {
        let page = |p: &PageRef| -> Result<Page, SessionError> {
            Ok(match p {
                PageRef::Market => Page::Market,
                PageRef::Portfolio => Page::Portfolio,
                PageRef::News => Page::News,
                PageRef::Analytics => Page::Analytics,
                PageRef::Chat => Page::Chat,
                PageRef::StockDetail { stock_id } => {
                    let stock = scenario
                        .stock(stock_id)
                        .ok_or_else(|| SessionError::Validation(format!("unknown stock {stock_id}")))?;
                    Page::StockDetail { stock_id: stock.id.clone(), authenticity: stock.authenticity }
                }
            })
        };
        let article = |id: &ArticleId| {
            scenario.article(id).ok_or_else(|| SessionError::Validation(format!("unknown article {id}")))
        };
        Ok(match kind {
            ClientEventKind::PageEnter { page: p } => EventKind::PageEnter { page: page(p)? },
            ClientEventKind::PageLeave { page: p } => EventKind::PageLeave { page: page(p)? },
            ClientEventKind::ReadArticleStart { article_id } => {
                let a = article(article_id)?;
                EventKind::ReadArticleStart {
                    article_id: a.id.clone(),
                    stock_id: a.stock_id.clone(),
                    sentiment: a.sentiment,
                    source_trust: a.source_trust,
                }
            }
            ClientEventKind::ReadArticleEnd { article_id } => {
                EventKind::ReadArticleEnd { article_id: article(article_id)?.id.clone() }
            }
            ClientEventKind::ChatReply { message_id, option } => {
                let m = scenario
                    .message(message_id)
                    .ok_or_else(|| SessionError::Validation(format!("unknown chat message {message_id}")))?;
                if !m.reply_options.is_empty() && !m.reply_options.contains(option) {
                    return Err(SessionError::Validation(format!("{option:?} is not a reply option of {message_id}")));
                }
                EventKind::ChatReply { message_id: m.id.clone(), option: option.clone() }
            }
        })
    }

    /// Applies an event read back from the log.
    pub fn apply_logged(&mut self, scenario: &Scenario, event: &SessionEvent) -> Result<(), SessionError> {
        if event.id != self.events.len() as u64 {
            return Err(SessionError::Corrupt(format!("expected event id {}, found {}", self.events.len(), event.id)));
        }
        if event.tick < self.current_tick {
            return Err(SessionError::Corrupt(format!("event {} goes back in time", event.id)));
        }
        self.current_tick = event.tick;
        if let EventKind::Buy(t) | EventKind::Sell(t) = &event.kind {
            let side = if matches!(event.kind, EventKind::Buy(_)) { Side::Buy } else { Side::Sell };
            let stock = scenario
                .stock(&t.stock_id)
                .ok_or_else(|| SessionError::Corrupt(format!("unknown stock {}", t.stock_id)))?;
            let fill = self.portfolio.execute_trade(stock, side, t.shares, event.tick)?;
            if fill.price != t.price || fill.realized_pnl != t.realized_pnl {
                return Err(SessionError::Corrupt(format!("trade {} does not reproduce", event.id)));
            }
        }
        award_xp(&mut self.portfolio, event, scenario, &self.rules);
        self.folder.push(event);
        self.events.push(event.clone());
        Ok(())
    }
}
