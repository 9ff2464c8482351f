use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(StockId);
string_id!(ArticleId);
string_id!(MessageId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Authenticity {
    /// Genuine listing following a random walk.
    Real,
    /// Genuine listing run through a pump-and-dump.
    Fraud,
    /// Fabricated company; delists to zero.
    Fake,
}

impl Authenticity {
    pub fn is_scam(self) -> bool {
        !matches!(self, Authenticity::Real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTrust {
    Trusted,
    Untrusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScamTag {
    PennyStockPumpAndDump,
    PyramidScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatAuthor {
    Mascot,
    Recruiter,
    User,
}

/// Parameters of one stock's price process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceProcessParams {
    pub seed: u64,
    /// Log drift per tick.
    pub drift: f64,
    /// Log volatility per tick.
    pub volatility: f64,
    pub pump_start: u32,
    pub pump_len: u32,
    pub dump_len: u32,
    pub pump_multiple: f64,
    pub crash_floor: f64,
}

impl PriceProcessParams {
    /// Parameters for a plain random walk; the pump fields are inert placeholders.
    pub fn random_walk(seed: u64, drift: f64, volatility: f64) -> Self {
        Self {
            seed,
            drift,
            volatility,
            pump_start: 0,
            pump_len: 1,
            dump_len: 1,
            pump_multiple: 2.0,
            crash_floor: 0.5,
        }
    }

    /// Last tick of the ramp; the trajectory peaks here.
    pub fn pump_end(&self) -> u32 {
        self.pump_start + self.pump_len
    }

    pub fn dump_end(&self) -> u32 {
        self.pump_end() + self.dump_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub tick: u32,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stock {
    pub id: StockId,
    pub ticker: String,
    pub name: String,
    pub authenticity: Authenticity,
    pub sector: String,
    pub price_history: Vec<PricePoint>,
    pub float_shares: u64,
    pub params: PriceProcessParams,
    /// Scheduled delisting tick (Fake stocks only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delist_tick: Option<u32>,
}

impl Stock {
    pub fn price_at(&self, tick: u32) -> Option<f64> {
        self.price_history.get(tick as usize).map(|p| p.price)
    }

    pub fn is_delisted_at(&self, tick: u32) -> bool {
        matches!(self.delist_tick, Some(d) if tick >= d)
    }

    /// (tick, price) of the highest price; earliest tick wins ties.
    pub fn peak(&self) -> Option<PricePoint> {
        self.price_history
            .iter()
            .copied()
            .fold(None, |best: Option<PricePoint>, p| match best {
                Some(b) if b.price >= p.price => Some(b),
                _ => Some(p),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub id: ArticleId,
    pub stock_id: StockId,
    pub headline: String,
    pub body: String,
    pub sentiment: Sentiment,
    pub source_trust: SourceTrust,
    pub publish_tick: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_tag: Option<ScamTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub id: MessageId,
    pub author: ChatAuthor,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_tag: Option<ScamTag>,
    #[serde(default)]
    pub reply_options: Vec<String>,
    pub publish_tick: u32,
}

/// A fully materialized market world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub horizon: u32,
    pub difficulty: Difficulty,
    pub stocks: Vec<Stock>,
    pub articles: Vec<NewsArticle>,
    pub chat_script: Vec<ChatMessage>,
    pub initial_cash: crate::Money,
    pub initial_xp: u64,
}

impl Scenario {
    pub fn stock(&self, id: &StockId) -> Option<&Stock> {
        self.stocks.iter().find(|s| &s.id == id)
    }

    pub fn article(&self, id: &ArticleId) -> Option<&NewsArticle> {
        self.articles.iter().find(|a| &a.id == id)
    }

    pub fn message(&self, id: &MessageId) -> Option<&ChatMessage> {
        self.chat_script.iter().find(|m| &m.id == id)
    }

    /// Articles published at or before `tick`.
    pub fn articles_until(&self, tick: u32) -> impl Iterator<Item = &NewsArticle> {
        self.articles.iter().filter(move |a| a.publish_tick <= tick)
    }

    pub fn chat_until(&self, tick: u32) -> impl Iterator<Item = &ChatMessage> {
        self.chat_script.iter().filter(move |m| m.publish_tick <= tick)
    }

    pub fn last_tick(&self) -> u32 {
        self.horizon.saturating_sub(1)
    }

    /// Canonical JSON encoding; equal scenarios encode to identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
