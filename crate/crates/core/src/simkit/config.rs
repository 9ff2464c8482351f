//! Scenario configuration file (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//! horizon = 52
//! initial_cash = 20000.0
//! initial_xp = 100
//! difficulty = "medium"
//!
//! [process.real]          # random walk for real listings
//! drift = 0.002
//! volatility = 0.03
//! [process.fraud]         # pump-and-dump envelope
//! drift = 0.0
//! volatility = 0.02
//! pump_start = [18, 30]   # inclusive range, drawn per stock from the seed
//! pump_len = 6
//! dump_len = 4
//! pump_multiple = 3.0
//! crash_floor = 0.2
//! [process.fake]
//! drift = 0.01
//! volatility = 0.04
//! delist_tick = 30
//!
//! [[stocks]]
//! id = "S01"
//! ticker = "SOLR"
//! name = "Solaris Energy"
//! sector = "energy"
//! authenticity = "real"    # real | fraud | fake
//! initial_price = 42.10
//! float_shares = 50000000
//! # optional per-stock overrides: drift, volatility, pump_start, pump_len,
//! # dump_len, pump_multiple, crash_floor, delist_tick
//!
//! [[stocks.articles]]
//! headline = "..."
//! body = "..."
//! sentiment = "positive"  # positive | negative | neutral
//! trust = "trusted"       # trusted | untrusted
//! tick = 3                # optional; see below
//!
//! [[chat]]
//! author = "recruiter"    # mascot | recruiter
//! text = "..."
//! tick = 5
//! reply_options = ["Tell me more", "No thanks"]
//! ```
//!
//! Articles without a `tick` are scheduled by the generator: untrusted articles on
//! fraud listings land inside the pump window, everything else on a seeded tick.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{Authenticity, ChatAuthor, Difficulty, Sentiment, SourceTrust};
use super::SimError;

pub const SCENARIO_CONFIG_VERSION: u32 = 1;

const DEFAULT_SCENARIO: &str = include_str!("../../assets/scenario.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_cash")]
    pub initial_cash: f64,
    #[serde(default = "default_xp")]
    pub initial_xp: u64,
    #[serde(default = "default_difficulty")]
    pub difficulty: Difficulty,
    pub process: ProcessDefaults,
    pub stocks: Vec<StockConfig>,
    #[serde(default)]
    pub chat: Vec<ChatConfig>,
}

fn default_horizon() -> u32 {
    52
}
fn default_cash() -> f64 {
    20_000.0
}
fn default_xp() -> u64 {
    100
}
fn default_difficulty() -> Difficulty {
    Difficulty::Medium
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDefaults {
    pub real: WalkConfig,
    pub fraud: FraudConfig,
    pub fake: FakeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub drift: f64,
    pub volatility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FraudConfig {
    pub drift: f64,
    pub volatility: f64,
    pub pump_start: [u32; 2],
    pub pump_len: u32,
    pub dump_len: u32,
    pub pump_multiple: f64,
    pub crash_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FakeConfig {
    pub drift: f64,
    pub volatility: f64,
    pub delist_tick: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StockConfig {
    pub id: String,
    pub ticker: String,
    pub name: String,
    pub sector: String,
    pub authenticity: Authenticity,
    pub initial_price: f64,
    pub float_shares: u64,
    #[serde(default)]
    pub drift: Option<f64>,
    #[serde(default)]
    pub volatility: Option<f64>,
    #[serde(default)]
    pub pump_start: Option<u32>,
    #[serde(default)]
    pub pump_len: Option<u32>,
    #[serde(default)]
    pub dump_len: Option<u32>,
    #[serde(default)]
    pub pump_multiple: Option<f64>,
    #[serde(default)]
    pub crash_floor: Option<f64>,
    #[serde(default)]
    pub delist_tick: Option<u32>,
    #[serde(default)]
    pub articles: Vec<ArticleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArticleConfig {
    pub headline: String,
    pub body: String,
    pub sentiment: Sentiment,
    pub trust: SourceTrust,
    #[serde(default)]
    pub tick: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatConfig {
    pub author: ChatAuthor,
    pub text: String,
    pub tick: u32,
    #[serde(default)]
    pub reply_options: Vec<String>,
}

impl ScenarioConfig {
    /// The shipped ten-listing scenario.
    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_SCENARIO).expect("bundled scenario config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        if cfg.version != SCENARIO_CONFIG_VERSION {
            return Err(SimError::Config(format!(
                "unsupported scenario config version {} (expected {SCENARIO_CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Checks everything that can be checked before drawing random numbers.
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::Config(msg));
        if self.stocks.is_empty() {
            return err("scenario has no stocks".into());
        }
        if self.horizon < 2 {
            return err(format!("horizon {} is too short", self.horizon));
        }
        if !(self.initial_cash.is_finite() && self.initial_cash >= 0.0) {
            return err(format!("initial_cash {} must be a non-negative amount", self.initial_cash));
        }
        let last = self.horizon - 1;
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.stocks {
            if !seen.insert(s.id.as_str()) {
                return err(format!("duplicate stock id {}", s.id));
            }
            if !(s.initial_price.is_finite() && s.initial_price > 0.0) {
                return err(format!("stock {}: initial_price must be positive", s.id));
            }
            let (_, vol) = self.walk_for(s);
            if !(vol.is_finite() && vol >= 0.0) {
                return err(format!("stock {}: volatility must be >= 0", s.id));
            }
            if !s.articles.iter().any(|a| a.trust == SourceTrust::Trusted) {
                return err(format!("stock {} has no trusted article", s.id));
            }
            for a in &s.articles {
                if matches!(a.tick, Some(t) if t > last) {
                    return err(format!("stock {}: article tick beyond horizon", s.id));
                }
            }
            match s.authenticity {
                Authenticity::Fraud => {
                    let f = &self.process.fraud;
                    let multiple = s.pump_multiple.unwrap_or(f.pump_multiple);
                    let floor = s.crash_floor.unwrap_or(f.crash_floor);
                    let pump_len = s.pump_len.unwrap_or(f.pump_len);
                    let dump_len = s.dump_len.unwrap_or(f.dump_len);
                    let latest_start = s.pump_start.unwrap_or(f.pump_start[1]);
                    let earliest_start = s.pump_start.unwrap_or(f.pump_start[0]);
                    if multiple.is_nan() || multiple <= 1.0 {
                        return err(format!("stock {}: pump_multiple must exceed 1", s.id));
                    }
                    if !(floor > 0.0 && floor < 1.0) {
                        return err(format!("stock {}: crash_floor must lie in (0, 1)", s.id));
                    }
                    if pump_len == 0 || dump_len == 0 {
                        return err(format!("stock {}: pump_len and dump_len must be >= 1", s.id));
                    }
                    if earliest_start > latest_start {
                        return err(format!("stock {}: empty pump_start range", s.id));
                    }
                    if latest_start + pump_len + dump_len > last {
                        return err(format!(
                            "horizon {} too short for fraud phases of stock {} (needs {})",
                            self.horizon,
                            s.id,
                            latest_start + pump_len + dump_len + 1
                        ));
                    }
                    let has_bait = s.articles.iter().any(|a| {
                        a.trust == SourceTrust::Untrusted && a.sentiment == Sentiment::Positive
                    });
                    if !has_bait {
                        return err(format!("fraud stock {} has no untrusted positive article", s.id));
                    }
                    for a in s.articles.iter().filter(|a| a.trust == SourceTrust::Untrusted) {
                        if let (Some(t), Some(start)) = (a.tick, s.pump_start) {
                            if a.sentiment == Sentiment::Positive && !(start..start + pump_len).contains(&t) {
                                return err(format!(
                                    "fraud stock {}: pinned pump article at tick {t} is outside the pump window",
                                    s.id
                                ));
                            }
                        }
                    }
                }
                Authenticity::Fake => {
                    let delist = s.delist_tick.unwrap_or(self.process.fake.delist_tick);
                    if delist == 0 || delist > last {
                        return err(format!("stock {}: delist tick {delist} outside (0, {last}]", s.id));
                    }
                }
                Authenticity::Real => {}
            }
        }
        let recruiters = self.chat.iter().filter(|c| c.author == ChatAuthor::Recruiter).count();
        if recruiters < 3 {
            return err(format!("chat script needs at least 3 recruiter messages, found {recruiters}"));
        }
        if let Some(c) = self.chat.iter().find(|c| c.tick > last) {
            return err(format!("chat message at tick {} is beyond the horizon", c.tick));
        }
        Ok(())
    }

    pub(crate) fn walk_for(&self, s: &StockConfig) -> (f64, f64) {
        let (d, v) = match s.authenticity {
            Authenticity::Real => (self.process.real.drift, self.process.real.volatility),
            Authenticity::Fraud => (self.process.fraud.drift, self.process.fraud.volatility),
            Authenticity::Fake => (self.process.fake.drift, self.process.fake.volatility),
        };
        (s.drift.unwrap_or(d), s.volatility.unwrap_or(v))
    }
}
