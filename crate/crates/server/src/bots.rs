//! Scripted players that drive a session through [`Service`] exactly like the web client.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use fraudaware_core::personalize::FeedbackBundle;
use fraudaware_core::rng::{seeded, standard_normal, SimRng};
use fraudaware_core::session::{
    ClientEvent, ClientEventKind, DigitalFootprint, PageRef, SessionEvent, SessionId, Side,
};
use fraudaware_core::simkit::{Sentiment, SourceTrust, StockId};

use crate::error::ApiError;
use crate::service::{NewsView, ReportRequest, Service, TradeRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BotArchetype {
    NoviceBot,
    ExperiencedBot,
}

impl std::str::FromStr for BotArchetype {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "novice" | "novicebot" => Ok(BotArchetype::NoviceBot),
            "experienced" | "experiencedbot" => Ok(BotArchetype::ExperiencedBot),
            other => Err(format!("unknown bot archetype {other:?}")),
        }
    }
}

/// Probability of each action at a decision point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionWeights {
    pub market: f64,
    pub stock_detail: f64,
    pub news: f64,
    pub portfolio: f64,
    pub chat: f64,
    pub trade: f64,
    pub idle: f64,
}

impl ActionWeights {
    fn as_array(&self) -> [f64; 7] {
        [self.market, self.stock_detail, self.news, self.portfolio, self.chat, self.trade, self.idle]
    }
}

/// Seconds spent on a page, drawn from a normal distribution floored at one second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dwell {
    pub mean: f64,
    pub sd: f64,
}

impl Dwell {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        (self.mean + self.sd * standard_normal(rng)).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellTimes {
    pub market: Dwell,
    pub stock_detail: Dwell,
    pub news: Dwell,
    pub article: Dwell,
    pub portfolio: Dwell,
    pub chat: Dwell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BotPolicy {
    pub archetype: BotArchetype,
    pub seed: u64,
    pub age: u32,
    /// Decision points per tick.
    pub actions_per_tick: u32,
    pub weights: ActionWeights,
    pub dwell: DwellTimes,
    /// Chance of picking an anonymous-source article when one is available.
    pub untrusted_preference: f64,
    /// Chance of buying a stock right after reading upbeat anonymous news about it.
    pub hype_follow: f64,
    /// Chance that a trade chases the biggest one-tick gainer instead of a random listing.
    pub momentum: f64,
    /// Chance of reporting a listing once it looks suspicious.
    pub report: f64,
    /// Three-tick gain above which a stock page looks suspicious.
    pub suspicious_gain: f64,
    /// Chance that a trade sells an open position instead of buying.
    pub sell: f64,
    /// Fraction of cash committed to a buy.
    pub budget_fraction: f64,
    /// Pick the first reply option when true, the last otherwise.
    pub agreeable: bool,
}

impl BotPolicy {
    pub fn novice(seed: u64) -> Self {
        Self {
            archetype: BotArchetype::NoviceBot,
            seed,
            age: 24,
            actions_per_tick: 2,
            weights: ActionWeights {
                market: 0.15,
                stock_detail: 0.10,
                news: 0.10,
                portfolio: 0.05,
                chat: 0.05,
                trade: 0.08,
                idle: 0.47,
            },
            dwell: DwellTimes {
                market: Dwell { mean: 20.0, sd: 6.0 },
                stock_detail: Dwell { mean: 25.0, sd: 8.0 },
                news: Dwell { mean: 8.0, sd: 3.0 },
                article: Dwell { mean: 20.0, sd: 8.0 },
                portfolio: Dwell { mean: 10.0, sd: 4.0 },
                chat: Dwell { mean: 12.0, sd: 4.0 },
            },
            untrusted_preference: 0.8,
            hype_follow: 0.6,
            momentum: 0.7,
            report: 0.02,
            suspicious_gain: 0.25,
            sell: 0.2,
            budget_fraction: 0.2,
            agreeable: true,
        }
    }

    pub fn experienced(seed: u64) -> Self {
        Self {
            archetype: BotArchetype::ExperiencedBot,
            seed,
            age: 38,
            actions_per_tick: 2,
            weights: ActionWeights {
                market: 0.15,
                stock_detail: 0.12,
                news: 0.10,
                portfolio: 0.08,
                chat: 0.03,
                trade: 0.04,
                idle: 0.48,
            },
            dwell: DwellTimes {
                market: Dwell { mean: 38.0, sd: 8.0 },
                stock_detail: Dwell { mean: 30.0, sd: 8.0 },
                news: Dwell { mean: 10.0, sd: 3.0 },
                article: Dwell { mean: 35.0, sd: 10.0 },
                portfolio: Dwell { mean: 15.0, sd: 5.0 },
                chat: Dwell { mean: 6.0, sd: 2.0 },
            },
            untrusted_preference: 0.2,
            hype_follow: 0.0,
            momentum: 0.1,
            report: 0.85,
            suspicious_gain: 0.25,
            sell: 0.3,
            budget_fraction: 0.1,
            agreeable: false,
        }
    }

    pub fn for_archetype(archetype: BotArchetype, seed: u64) -> Self {
        match archetype {
            BotArchetype::NoviceBot => Self::novice(seed),
            BotArchetype::ExperiencedBot => Self::experienced(seed),
        }
    }

    /// A policy that never acts.
    pub fn idle(archetype: BotArchetype, seed: u64) -> Self {
        let mut p = Self::for_archetype(archetype, seed);
        p.weights = ActionWeights {
            market: 0.0,
            stock_detail: 0.0,
            news: 0.0,
            portfolio: 0.0,
            chat: 0.0,
            trade: 0.0,
            idle: 1.0,
        };
        p
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        let w = self.weights.as_array();
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ApiError::validation("action weights must be finite and non-negative"));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ApiError::validation(format!("action weights sum to {total}, expected 1")));
        }
        let probs = [
            ("untrusted_preference", self.untrusted_preference),
            ("hype_follow", self.hype_follow),
            ("momentum", self.momentum),
            ("report", self.report),
            ("sell", self.sell),
            ("budget_fraction", self.budget_fraction),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ApiError::validation(format!("{name} = {p} is not a probability")));
            }
        }
        let d = &self.dwell;
        for (name, dw) in [
            ("market", d.market),
            ("stock_detail", d.stock_detail),
            ("news", d.news),
            ("article", d.article),
            ("portfolio", d.portfolio),
            ("chat", d.chat),
        ] {
            if !(dw.mean.is_finite() && dw.mean > 0.0 && dw.sd.is_finite() && dw.sd >= 0.0) {
                return Err(ApiError::validation(format!("dwell for {name} needs mean > 0 and sd >= 0")));
            }
        }
        if !self.suspicious_gain.is_finite() || self.suspicious_gain <= 0.0 {
            return Err(ApiError::validation("suspicious_gain must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotRun {
    pub session_id: SessionId,
    pub archetype: BotArchetype,
    pub seed: u64,
    pub events: Vec<SessionEvent>,
    pub footprint: DigitalFootprint,
    /// Present when the service had a published model.
    pub feedback: Option<FeedbackBundle>,
}

#[derive(Clone, Copy)]
enum Action {
    Market,
    StockDetail,
    News,
    Portfolio,
    Chat,
    Trade,
    Idle,
}

const ACTIONS: [Action; 7] =
    [Action::Market, Action::StockDetail, Action::News, Action::Portfolio, Action::Chat, Action::Trade, Action::Idle];

struct Bot<'a> {
    svc: &'a Service,
    policy: &'a BotPolicy,
    rng: SimRng,
    id: SessionId,
    clock: f64,
    tick: u32,
    replied: BTreeSet<String>,
    reported: BTreeSet<StockId>,
}

impl Bot<'_> {
    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.random::<f64>() < p
    }

    fn pick<T: Clone>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.random_range(0..items.len())].clone())
        }
    }

    fn draw_action(&mut self) -> Action {
        let w = self.policy.weights.as_array();
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (a, p) in ACTIONS.iter().zip(w) {
            acc += p;
            if u < acc {
                return *a;
            }
        }
        Action::Idle
    }

    fn gap(&mut self) {
        self.clock += self.rng.random_range(1.0..5.0);
    }

    fn event(&self, kind: ClientEventKind, wall_time: f64) -> ClientEvent {
        ClientEvent { wall_time, kind }
    }

    /// Enters `page`, runs `inner` while on it, then leaves after `dwell` seconds.
    fn visit(&mut self, page: PageRef, dwell: Dwell, inner: Vec<ClientEventKind>) -> Result<(), ApiError> {
        self.gap();
        let mut batch = vec![self.event(ClientEventKind::PageEnter { page: page.clone() }, self.clock)];
        for kind in inner {
            self.clock += 1.0;
            batch.push(self.event(kind, self.clock));
        }
        self.clock += dwell.sample(&mut self.rng);
        batch.push(self.event(ClientEventKind::PageLeave { page }, self.clock));
        self.svc.record_events(&self.id, &batch)?;
        Ok(())
    }

    fn listed(&self) -> Vec<(StockId, f64, f64)> {
        self.svc
            .market(self.tick)
            .into_iter()
            .filter(|r| !r.delisted)
            .filter_map(|r| r.price.map(|p| (r.stock_id, p, r.change_pct.unwrap_or(0.0))))
            .collect()
    }

    fn three_tick_gain(&self, stock: &StockId) -> Result<f64, ApiError> {
        let view = self.svc.stock(stock, self.tick)?;
        let h = &view.history;
        Ok(match (h.len().checked_sub(4).map(|i| &h[i]), h.last()) {
            (Some(a), Some(b)) if a.price > 0.0 => b.price / a.price - 1.0,
            _ => 0.0,
        })
    }

    fn maybe_report(&mut self, stock: &StockId) -> Result<(), ApiError> {
        if self.reported.contains(stock) || !self.chance(self.policy.report) {
            return Ok(());
        }
        self.gap();
        self.svc.report_fraud(&self.id, &ReportRequest { stock: stock.clone(), wall_time: Some(self.clock) })?;
        self.reported.insert(stock.clone());
        Ok(())
    }

    fn buy(&mut self, stock: &StockId, price: f64) -> Result<(), ApiError> {
        let cash = self.svc.portfolio(&self.id)?.cash.as_dollars();
        let shares = (cash * self.policy.budget_fraction / (price + 0.01)).floor() as u64;
        if shares == 0 {
            return Ok(());
        }
        self.gap();
        let req = TradeRequest { stock: stock.clone(), side: Side::Buy, shares, wall_time: Some(self.clock) };
        match self.svc.trade(&self.id, &req) {
            Ok(_) => Ok(()),
            Err(e) if e.status == 409 => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn do_market(&mut self) -> Result<(), ApiError> {
        self.visit(PageRef::Market, self.policy.dwell.market, Vec::new())
    }

    fn do_stock_detail(&mut self) -> Result<(), ApiError> {
        let listed = self.listed();
        let Some((stock, _, _)) = self.pick(&listed) else {
            return Ok(());
        };
        self.visit(PageRef::StockDetail { stock_id: stock.clone() }, self.policy.dwell.stock_detail, Vec::new())?;
        if self.three_tick_gain(&stock)? > self.policy.suspicious_gain {
            self.maybe_report(&stock)?;
        }
        Ok(())
    }

    fn do_news(&mut self) -> Result<(), ApiError> {
        let news = self.svc.news(self.tick);
        let fresh: Vec<NewsView> = news.iter().filter(|a| a.publish_tick + 3 > self.tick).cloned().collect();
        let pool = if fresh.is_empty() { news } else { fresh };
        let untrusted: Vec<NewsView> =
            pool.iter().filter(|a| a.source_trust == SourceTrust::Untrusted).cloned().collect();
        let trusted: Vec<NewsView> = pool.iter().filter(|a| a.source_trust == SourceTrust::Trusted).cloned().collect();
        let choice = if !untrusted.is_empty() && (trusted.is_empty() || self.chance(self.policy.untrusted_preference)) {
            self.pick(&untrusted)
        } else {
            self.pick(&trusted)
        };
        let Some(article) = choice else {
            return self.visit(PageRef::News, self.policy.dwell.news, Vec::new());
        };
        self.gap();
        let start = self.clock;
        let read = self.policy.dwell.article.sample(&mut self.rng);
        let browse = self.policy.dwell.news.sample(&mut self.rng);
        let batch = vec![
            self.event(ClientEventKind::PageEnter { page: PageRef::News }, start),
            self.event(ClientEventKind::ReadArticleStart { article_id: article.article_id.clone() }, start + 1.0),
            self.event(ClientEventKind::ReadArticleEnd { article_id: article.article_id.clone() }, start + 1.0 + read),
            self.event(ClientEventKind::PageLeave { page: PageRef::News }, start + 1.0 + read + browse),
        ];
        self.clock = start + 1.0 + read + browse;
        self.svc.record_events(&self.id, &batch)?;
        let hype = article.source_trust == SourceTrust::Untrusted && article.sentiment == Sentiment::Positive;
        if hype {
            if self.chance(self.policy.hype_follow) {
                let price = self.listed().into_iter().find(|(s, _, _)| *s == article.stock_id).map(|(_, p, _)| p);
                if let Some(price) = price {
                    self.buy(&article.stock_id, price)?;
                }
            }
            self.maybe_report(&article.stock_id)?;
        }
        Ok(())
    }

    fn do_chat(&mut self) -> Result<(), ApiError> {
        let open: Vec<_> = self
            .svc
            .chat(self.tick)
            .into_iter()
            .filter(|m| !m.reply_options.is_empty() && !self.replied.contains(m.message_id.as_str()))
            .collect();
        let mut inner = Vec::new();
        if let Some(m) = open.last() {
            let option = if self.policy.agreeable { m.reply_options[0].clone() } else { m.reply_options.last().cloned().unwrap_or_default() };
            self.replied.insert(m.message_id.as_str().to_string());
            inner.push(ClientEventKind::ChatReply { message_id: m.message_id.clone(), option });
        }
        self.visit(PageRef::Chat, self.policy.dwell.chat, inner)
    }

    fn do_trade(&mut self) -> Result<(), ApiError> {
        let held: Vec<(StockId, u64)> = self
            .svc
            .portfolio(&self.id)?
            .positions
            .into_iter()
            .filter(|p| p.shares > 0 && p.price.as_dollars() > 0.0)
            .map(|p| (p.stock_id, p.shares))
            .collect();
        if !held.is_empty() && self.chance(self.policy.sell) {
            let (stock, shares) = self.pick(&held).expect("non-empty");
            self.gap();
            let req = TradeRequest { stock, side: Side::Sell, shares, wall_time: Some(self.clock) };
            return match self.svc.trade(&self.id, &req) {
                Ok(_) => Ok(()),
                Err(e) if e.status == 409 => Ok(()),
                Err(e) => Err(e),
            };
        }
        let listed = self.listed();
        let target = if self.chance(self.policy.momentum) {
            listed.iter().cloned().max_by(|a, b| a.2.total_cmp(&b.2))
        } else {
            self.pick(&listed)
        };
        match target {
            Some((stock, price, _)) => self.buy(&stock, price),
            None => Ok(()),
        }
    }
}

/// Plays a full-horizon session. The event log depends only on the policy, the scenario and
/// the published model.
pub fn run_bot_session(svc: &Service, policy: &BotPolicy) -> Result<BotRun, ApiError> {
    policy.validate()?;
    let created = svc.create_session(policy.age)?;
    let mut bot = Bot {
        svc,
        policy,
        rng: seeded(policy.seed),
        id: created.session.session_id.clone(),
        clock: 0.0,
        tick: 0,
        replied: BTreeSet::new(),
        reported: BTreeSet::new(),
    };
    let last = svc.scenario().last_tick();
    loop {
        for _ in 0..policy.actions_per_tick {
            match bot.draw_action() {
                Action::Market => bot.do_market()?,
                Action::StockDetail => bot.do_stock_detail()?,
                Action::News => bot.do_news()?,
                Action::Portfolio => bot.visit(PageRef::Portfolio, policy.dwell.portfolio, Vec::new())?,
                Action::Chat => bot.do_chat()?,
                Action::Trade => bot.do_trade()?,
                Action::Idle => {}
            }
        }
        if bot.tick >= last {
            break;
        }
        bot.tick = svc.advance(&bot.id, 1)?.current_tick;
    }
    let feedback = match svc.model() {
        Some(_) => Some(svc.feedback(&bot.id)?),
        None => None,
    };
    Ok(BotRun {
        session_id: bot.id.clone(),
        archetype: policy.archetype,
        seed: policy.seed,
        events: svc.events(&bot.id)?,
        footprint: svc.footprint(&bot.id)?,
        feedback,
    })
}
