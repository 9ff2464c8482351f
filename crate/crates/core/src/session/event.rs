use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simkit::{ArticleId, Authenticity, MessageId, Sentiment, SourceTrust, StockId};
use crate::Money;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A platform surface whose dwell time is tracked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Page {
    Market,
    Portfolio,
    News,
    Analytics,
    Chat,
    StockDetail { stock_id: StockId, authenticity: Authenticity },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradePayload {
    pub stock_id: StockId,
    pub authenticity: Authenticity,
    pub shares: u64,
    /// Execution price per share.
    pub price: Money,
    /// Proceeds minus average cost for sells, zero for buys.
    #[serde(default)]
    pub realized_pnl: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    PageEnter { page: Page },
    PageLeave { page: Page },
    Buy(TradePayload),
    Sell(TradePayload),
    ReadArticleStart {
        article_id: ArticleId,
        stock_id: StockId,
        sentiment: Sentiment,
        source_trust: SourceTrust,
    },
    ReadArticleEnd { article_id: ArticleId },
    ReportFraud { stock_id: StockId, authenticity: Authenticity },
    ChatReply { message_id: MessageId, option: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PageEnter { .. } => "page_enter",
            EventKind::PageLeave { .. } => "page_leave",
            EventKind::Buy(_) => "buy",
            EventKind::Sell(_) => "sell",
            EventKind::ReadArticleStart { .. } => "read_article_start",
            EventKind::ReadArticleEnd { .. } => "read_article_end",
            EventKind::ReportFraud { .. } => "report_fraud",
            EventKind::ChatReply { .. } => "chat_reply",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Position in the session's log, starting at 0.
    pub id: u64,
    pub session_id: SessionId,
    pub tick: u32,
    /// Client clock in seconds since session start.
    pub wall_time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}
