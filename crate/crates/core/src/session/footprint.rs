//! The 17-metric digital footprint and the event fold that produces it.

use serde::{Deserialize, Serialize};

use super::event::{EventKind, Page, SessionEvent, SessionId};
use crate::personalize::InvestorType;
use crate::simkit::{ArticleId, Authenticity, Sentiment, SourceTrust};

pub const METRIC_COUNT: usize = 17;

/// Column order of every feature table built from footprints.
pub const METRIC_NAMES: [&str; METRIC_COUNT] = [
    "age",
    "t_fraud_stock_page",
    "t_real_stock_page",
    "t_fake_stock_page",
    "t_market_page",
    "t_portfolio_page",
    "t_news_page",
    "t_read_positive_news",
    "t_read_neutral_news",
    "n_fake_bought",
    "n_fraud_bought",
    "n_real_bought",
    "n_frauds_reported",
    "n_articles_read",
    "n_transactions",
    "n_untrusted_read",
    "n_trusted_read",
];

/// Longest dwell credited to a single page visit or article read, in seconds.
pub const DEFAULT_DWELL_CAP_SECS: f64 = 30.0 * 60.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TelemetryError {
    #[error("unmatched start/end events: {orphan_ids:?}")]
    Unmatched { orphan_ids: Vec<u64> },
    #[error("metric {name} = {value} is invalid")]
    InvalidMetric { name: &'static str, value: f64 },
}

/// Durations are seconds, counts are event tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalFootprint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<InvestorType>,
    pub age: u32,
    pub t_fraud_stock_page: f64,
    pub t_real_stock_page: f64,
    pub t_fake_stock_page: f64,
    pub t_market_page: f64,
    pub t_portfolio_page: f64,
    pub t_news_page: f64,
    pub t_read_positive_news: f64,
    pub t_read_neutral_news: f64,
    pub n_fake_bought: u64,
    pub n_fraud_bought: u64,
    pub n_real_bought: u64,
    pub n_frauds_reported: u64,
    pub n_articles_read: u64,
    pub n_transactions: u64,
    pub n_untrusted_read: u64,
    pub n_trusted_read: u64,
}

impl DigitalFootprint {
    pub fn zero(age: u32) -> Self {
        Self::from_metrics(&{
            let mut m = [0.0; METRIC_COUNT];
            m[0] = f64::from(age);
            m
        })
        .expect("zero footprint is valid")
    }

    pub fn metrics(&self) -> [f64; METRIC_COUNT] {
        [
            f64::from(self.age),
            self.t_fraud_stock_page,
            self.t_real_stock_page,
            self.t_fake_stock_page,
            self.t_market_page,
            self.t_portfolio_page,
            self.t_news_page,
            self.t_read_positive_news,
            self.t_read_neutral_news,
            self.n_fake_bought as f64,
            self.n_fraud_bought as f64,
            self.n_real_bought as f64,
            self.n_frauds_reported as f64,
            self.n_articles_read as f64,
            self.n_transactions as f64,
            self.n_untrusted_read as f64,
            self.n_trusted_read as f64,
        ]
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        METRIC_NAMES.iter().position(|n| *n == name).map(|i| self.metrics()[i])
    }

    /// Builds a footprint from a metric vector in [`METRIC_NAMES`] order. Durations must be
    /// finite and non-negative; age and counts must be non-negative integers.
    pub fn from_metrics(m: &[f64; METRIC_COUNT]) -> Result<Self, TelemetryError> {
        for (i, &v) in m.iter().enumerate() {
            let is_count = i == 0 || i >= 9;
            if !v.is_finite() || v < 0.0 || (is_count && v.fract() != 0.0) {
                return Err(TelemetryError::InvalidMetric { name: METRIC_NAMES[i], value: v });
            }
        }
        let n = |i: usize| m[i] as u64;
        Ok(Self {
            session_id: None,
            label: None,
            age: m[0] as u32,
            t_fraud_stock_page: m[1],
            t_real_stock_page: m[2],
            t_fake_stock_page: m[3],
            t_market_page: m[4],
            t_portfolio_page: m[5],
            t_news_page: m[6],
            t_read_positive_news: m[7],
            t_read_neutral_news: m[8],
            n_fake_bought: n(9),
            n_fraud_bought: n(10),
            n_real_bought: n(11),
            n_frauds_reported: n(12),
            n_articles_read: n(13),
            n_transactions: n(14),
            n_untrusted_read: n(15),
            n_trusted_read: n(16),
        })
    }

    /// The two structural invariants between counters.
    pub fn is_consistent(&self) -> bool {
        self.n_articles_read == self.n_untrusted_read + self.n_trusted_read
            && self.n_transactions >= self.n_fake_bought + self.n_fraud_bought + self.n_real_bought
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FrameKey {
    Page(Page),
    Article(ArticleId),
}

#[derive(Debug, Clone)]
struct OpenFrame {
    key: FrameKey,
    event_id: u64,
    started: f64,
    read: Option<(Sentiment, SourceTrust)>,
}

/// Incremental left fold of session events into a footprint.
///
/// Start/end pairs (page enter/leave, article read start/end) must nest like a stack.
/// An end that does not close the innermost open frame is recorded as an orphan and
/// otherwise ignored; frames still open when the fold finishes are orphans too.
#[derive(Debug, Clone)]
pub struct FootprintFolder {
    footprint: DigitalFootprint,
    open: Vec<OpenFrame>,
    orphans: Vec<u64>,
    dwell_cap: f64,
}

impl FootprintFolder {
    pub fn new(age: u32) -> Self {
        Self::with_dwell_cap(age, DEFAULT_DWELL_CAP_SECS)
    }

    pub fn with_dwell_cap(age: u32, dwell_cap: f64) -> Self {
        Self { footprint: DigitalFootprint::zero(age), open: Vec::new(), orphans: Vec::new(), dwell_cap }
    }

    pub fn push(&mut self, event: &SessionEvent) {
        let fp = &mut self.footprint;
        if fp.session_id.is_none() {
            fp.session_id = Some(event.session_id.clone());
        }
        match &event.kind {
            EventKind::PageEnter { page } => self.open.push(OpenFrame {
                key: FrameKey::Page(page.clone()),
                event_id: event.id,
                started: event.wall_time,
                read: None,
            }),
            EventKind::ReadArticleStart { article_id, sentiment, source_trust, .. } => self.open.push(OpenFrame {
                key: FrameKey::Article(article_id.clone()),
                event_id: event.id,
                started: event.wall_time,
                read: Some((*sentiment, *source_trust)),
            }),
            EventKind::PageLeave { page } => self.close(FrameKey::Page(page.clone()), event),
            EventKind::ReadArticleEnd { article_id } => self.close(FrameKey::Article(article_id.clone()), event),
            EventKind::Buy(trade) => {
                match trade.authenticity {
                    Authenticity::Real => fp.n_real_bought += 1,
                    Authenticity::Fraud => fp.n_fraud_bought += 1,
                    Authenticity::Fake => fp.n_fake_bought += 1,
                }
                fp.n_transactions += 1;
            }
            EventKind::Sell(_) => fp.n_transactions += 1,
            EventKind::ReportFraud { .. } => fp.n_frauds_reported += 1,
            EventKind::ChatReply { .. } => {}
        }
    }

    fn close(&mut self, key: FrameKey, event: &SessionEvent) {
        match self.open.last() {
            Some(top) if top.key == key => {}
            _ => {
                self.orphans.push(event.id);
                return;
            }
        }
        let frame = self.open.pop().expect("checked above");
        let dwell = (event.wall_time - frame.started).clamp(0.0, self.dwell_cap);
        let fp = &mut self.footprint;
        match (&frame.key, frame.read) {
            (FrameKey::Page(page), _) => match page {
                Page::Market => fp.t_market_page += dwell,
                Page::Portfolio => fp.t_portfolio_page += dwell,
                Page::News => fp.t_news_page += dwell,
                Page::StockDetail { authenticity, .. } => match authenticity {
                    Authenticity::Real => fp.t_real_stock_page += dwell,
                    Authenticity::Fraud => fp.t_fraud_stock_page += dwell,
                    Authenticity::Fake => fp.t_fake_stock_page += dwell,
                },
                Page::Analytics | Page::Chat => {}
            },
            (FrameKey::Article(_), Some((sentiment, trust))) => {
                match sentiment {
                    Sentiment::Positive => fp.t_read_positive_news += dwell,
                    Sentiment::Neutral => fp.t_read_neutral_news += dwell,
                    // kept in the event log only
                    Sentiment::Negative => {}
                }
                fp.n_articles_read += 1;
                match trust {
                    SourceTrust::Trusted => fp.n_trusted_read += 1,
                    SourceTrust::Untrusted => fp.n_untrusted_read += 1,
                }
            }
            (FrameKey::Article(_), None) => unreachable!("article frames carry read metadata"),
        }
    }

    pub fn extend<'a>(&mut self, events: impl IntoIterator<Item = &'a SessionEvent>) {
        for e in events {
            self.push(e);
        }
    }

    /// Footprint so far, ignoring frames that are still open.
    pub fn snapshot(&self) -> DigitalFootprint {
        self.footprint.clone()
    }

    /// Ids of events that would make [`finish`](Self::finish) fail.
    pub fn orphan_ids(&self) -> Vec<u64> {
        let mut ids = self.orphans.clone();
        ids.extend(self.open.iter().map(|f| f.event_id));
        ids.sort_unstable();
        ids
    }

    /// True when `event` would close the innermost open frame (or is not an end event).
    pub fn accepts(&self, event: &SessionEvent) -> bool {
        let key = match &event.kind {
            EventKind::PageLeave { page } => FrameKey::Page(page.clone()),
            EventKind::ReadArticleEnd { article_id } => FrameKey::Article(article_id.clone()),
            _ => return true,
        };
        matches!(self.open.last(), Some(top) if top.key == key)
    }

    pub fn open_frames(&self) -> usize {
        self.open.len()
    }

    pub fn finish(self) -> Result<DigitalFootprint, TelemetryError> {
        let orphan_ids = self.orphan_ids();
        if orphan_ids.is_empty() {
            Ok(self.footprint)
        } else {
            Err(TelemetryError::Unmatched { orphan_ids })
        }
    }
}

/// Folds a complete, well-nested session log.
pub fn fold_footprint(events: &[SessionEvent], user_age: u32) -> Result<DigitalFootprint, TelemetryError> {
    let mut folder = FootprintFolder::new(user_age);
    folder.extend(events);
    folder.finish()
}
