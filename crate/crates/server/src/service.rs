//! Transport-independent application layer shared by the HTTP handlers, the CLI and the
//! bots.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use fraudaware_core::analytics::{build_report, generate_cohort, CohortSpec, InsightReport};
use fraudaware_core::mlcore::ClassifierKind;
use fraudaware_core::personalize::{
    build_training_table, make_bundle, predict_type, train_pipeline, FeedbackBundle, KnowledgePool, PipelineConfig,
    PipelineModel, DEFAULT_FEEDBACK_CADENCE,
};
use fraudaware_core::session::{
    ClientEvent, DigitalFootprint, Portfolio, SessionEvent, SessionId, SessionState, Side, XpRules,
};
use fraudaware_core::simkit::{
    ArticleId, ChatAuthor, MessageId, PricePoint, Scenario, Sentiment, SourceTrust, StockId,
};
use fraudaware_core::Money;

use crate::error::ApiError;
use crate::store::{ApiSession, EventStore};

/// Ticks of price history returned with a stock view.
pub const HISTORY_WINDOW: u32 = 52;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Classifier used for feedback bundles.
    pub classifier: ClassifierKind,
    /// Events between automatic feedback re-evaluations.
    pub feedback_cadence: usize,
    pub rules: XpRules,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierKind::Perceptron,
            feedback_cadence: DEFAULT_FEEDBACK_CADENCE,
            rules: XpRules::default(),
        }
    }
}

/// A trained pipeline together with the cohort it was trained on.
#[derive(Debug, Clone)]
pub struct PublishedModel {
    pub cohort_id: String,
    pub cohort: Vec<DigitalFootprint>,
    pub model: PipelineModel,
}

struct SessionEntry {
    meta: ApiSession,
    state: SessionState,
    persisted: usize,
    since_feedback: usize,
    feedback: Option<FeedbackBundle>,
}

pub struct Service {
    scenario: Arc<Scenario>,
    scenario_id: String,
    pool: Arc<KnowledgePool>,
    store: Arc<dyn EventStore>,
    config: ServiceConfig,
    model: RwLock<Option<Arc<PublishedModel>>>,
    sessions: RwLock<BTreeMap<SessionId, Arc<Mutex<SessionEntry>>>>,
    next_id: Mutex<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRow {
    pub stock_id: StockId,
    pub ticker: String,
    pub name: String,
    pub sector: String,
    pub price: Option<f64>,
    /// Percent change from the previous tick.
    pub change_pct: Option<f64>,
    pub delisted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockView {
    pub stock_id: StockId,
    pub ticker: String,
    pub name: String,
    pub sector: String,
    pub float_shares: u64,
    pub delisted: bool,
    pub tick: u32,
    pub horizon: u32,
    /// Up to `HISTORY_WINDOW` prices ending at the viewing tick.
    pub history: Vec<PricePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsView {
    pub article_id: ArticleId,
    pub stock_id: StockId,
    pub headline: String,
    pub body: String,
    pub sentiment: Sentiment,
    pub source_trust: SourceTrust,
    pub publish_tick: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatView {
    pub message_id: MessageId,
    pub author: ChatAuthor,
    pub text: String,
    pub reply_options: Vec<String>,
    pub publish_tick: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionView {
    pub stock_id: StockId,
    pub shares: u64,
    pub cost_basis: Money,
    pub price: Money,
    pub value: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioView {
    pub tick: u32,
    pub cash: Money,
    pub xp: u64,
    pub level: u32,
    pub positions: Vec<PositionView>,
    pub holdings_value: Money,
    pub total_value: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: ApiSession,
    pub portfolio: PortfolioView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRequest {
    pub stock: StockId,
    pub side: Side,
    pub shares: u64,
    #[serde(default)]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeResult {
    pub stock_id: StockId,
    pub side: Side,
    pub shares: u64,
    pub price: Money,
    pub cash_delta: Money,
    pub realized_pnl: Money,
    pub portfolio: PortfolioView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRequest {
    pub stock: StockId,
    #[serde(default)]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportResult {
    pub stock_id: StockId,
    pub xp_awarded: i64,
    pub portfolio: PortfolioView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsAccepted {
    pub accepted: usize,
    pub total_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionAnalytics {
    pub session_id: SessionId,
    pub tick: u32,
    pub n_events: usize,
    pub footprint: DigitalFootprint,
    pub total_value: Money,
    pub profit: Money,
    pub xp: u64,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRequest {
    /// Overrides the default cohort's seed.
    pub cohort_seed: Option<u64>,
    pub cohort: Option<CohortSpec>,
    pub config: Option<PipelineConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub cohort_id: String,
    pub n_footprints: usize,
    pub selected_features: Vec<String>,
    pub accuracy: BTreeMap<String, f64>,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl Service {
    /// Builds the service and restores every session found in `store`.
    pub fn open(
        scenario: Scenario,
        scenario_id: impl Into<String>,
        pool: KnowledgePool,
        store: Arc<dyn EventStore>,
        config: ServiceConfig,
    ) -> Result<Self, ApiError> {
        let service = Self {
            scenario: Arc::new(scenario),
            scenario_id: scenario_id.into(),
            pool: Arc::new(pool),
            store,
            config,
            model: RwLock::new(None),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: Mutex::new(1),
        };
        let stored = service.store.load()?;
        let mut sessions = service.sessions.write().expect("sessions lock");
        for s in stored {
            let mut state = SessionState::replay(
                s.meta.session_id.clone(),
                s.meta.user_age,
                &service.scenario,
                service.config.rules,
                &s.events,
            )
            .map_err(|e| ApiError::new(500, "CorruptLog", format!("session {}: {e}", s.meta.session_id)))?;
            state.current_tick = state.current_tick.max(s.meta.current_tick);
            let persisted = s.events.len();
            let n = s.meta.session_id.as_str().trim_start_matches("s-").parse::<u64>().unwrap_or(0);
            let mut next = service.next_id.lock().expect("id lock");
            *next = (*next).max(n + 1);
            sessions.insert(
                s.meta.session_id.clone(),
                Arc::new(Mutex::new(SessionEntry { meta: s.meta, state, persisted, since_feedback: 0, feedback: None })),
            );
        }
        drop(sessions);
        Ok(service)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn pool(&self) -> &KnowledgePool {
        &self.pool
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.sessions.read().expect("sessions lock").keys().cloned().collect()
    }

    fn entry(&self, id: &SessionId) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("SessionNotFound", format!("no session {id}")))
    }

    /// Runs `f` with exclusive access to one session.
    fn with_session<T>(
        &self,
        id: &SessionId,
        f: impl FnOnce(&mut SessionEntry) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock().expect("session lock");
        f(&mut guard)
    }

    fn persist(&self, e: &mut SessionEntry) -> Result<(), ApiError> {
        let new = &e.state.events()[e.persisted..];
        if !new.is_empty() {
            self.store.append(&e.meta.session_id, new)?;
            e.since_feedback += new.len();
            e.persisted = e.state.events().len();
        }
        if e.since_feedback >= self.config.feedback_cadence {
            self.refresh_feedback(e)?;
        }
        Ok(())
    }

    fn refresh_feedback(&self, e: &mut SessionEntry) -> Result<Option<FeedbackBundle>, ApiError> {
        e.since_feedback = 0;
        let Some(published) = self.model() else {
            return Ok(None);
        };
        let (t, confidence) = predict_type(&published.model, &e.state.footprint(), self.config.classifier)
            .map_err(|err| ApiError::new(500, "PredictionFailed", err.to_string()))?;
        let bundle = make_bundle(&self.pool, Some(e.meta.session_id.clone()), t, confidence);
        let changed = e
            .feedback
            .as_ref()
            .is_none_or(|prev| prev.predicted_type != bundle.predicted_type || prev.difficulty != bundle.difficulty);
        if changed {
            self.store.append_feedback(&e.meta.session_id, &bundle)?;
        }
        e.feedback = Some(bundle.clone());
        Ok(Some(bundle))
    }

    fn portfolio_view(&self, state: &SessionState) -> PortfolioView {
        let tick = state.current_tick;
        let p: &Portfolio = &state.portfolio;
        let positions: Vec<PositionView> = p
            .positions
            .iter()
            .map(|(id, pos)| {
                let price = self
                    .scenario
                    .stock(id)
                    .and_then(|s| fraudaware_core::session::quote(s, tick).ok())
                    .unwrap_or(Money::ZERO);
                let value = price.checked_mul(pos.shares).unwrap_or(Money::ZERO);
                PositionView { stock_id: id.clone(), shares: pos.shares, cost_basis: pos.cost_basis, price, value }
            })
            .collect();
        let holdings_value: Money = positions.iter().map(|p| p.value).sum();
        PortfolioView {
            tick,
            cash: p.cash,
            xp: p.xp,
            level: p.level,
            positions,
            holdings_value,
            total_value: p.cash + holdings_value,
        }
    }

    pub fn create_session(&self, age: u32) -> Result<SessionCreated, ApiError> {
        if !(1..=150).contains(&age) {
            return Err(ApiError::validation(format!("age {age} is outside 1..=150")));
        }
        let id = {
            let mut next = self.next_id.lock().expect("id lock");
            let id = SessionId::new(format!("s-{:06}", *next));
            *next += 1;
            id
        };
        let meta = ApiSession {
            session_id: id.clone(),
            user_age: age,
            scenario_id: self.scenario_id.clone(),
            created_at: now_secs(),
            current_tick: 0,
        };
        let state = SessionState::new(id.clone(), age, &self.scenario, self.config.rules);
        self.store.put_meta(&meta)?;
        let portfolio = self.portfolio_view(&state);
        let entry = SessionEntry { meta: meta.clone(), state, persisted: 0, since_feedback: 0, feedback: None };
        self.sessions.write().expect("sessions lock").insert(id, Arc::new(Mutex::new(entry)));
        Ok(SessionCreated { session: meta, portfolio })
    }

    pub fn session(&self, id: &SessionId) -> Result<ApiSession, ApiError> {
        self.with_session(id, |e| Ok(e.meta.clone()))
    }

    /// Tick used for market views: the session's clock when given, else `tick`, else 0.
    pub fn view_tick(&self, session: Option<&SessionId>, tick: Option<u32>) -> Result<u32, ApiError> {
        match (session, tick) {
            (Some(id), _) => self.with_session(id, |e| Ok(e.state.current_tick)),
            (None, Some(t)) if t <= self.scenario.last_tick() => Ok(t),
            (None, Some(t)) => Err(ApiError::validation(format!("tick {t} is past the horizon"))),
            (None, None) => Ok(0),
        }
    }

    pub fn market(&self, tick: u32) -> Vec<MarketRow> {
        self.scenario
            .stocks
            .iter()
            .map(|s| {
                let delisted = s.is_delisted_at(tick);
                let price = if delisted { None } else { s.price_at(tick) };
                let prev = tick.checked_sub(1).and_then(|t| s.price_at(t));
                let change_pct = match (price, prev) {
                    (Some(p), Some(q)) if q > 0.0 => Some((p / q - 1.0) * 100.0),
                    _ => None,
                };
                MarketRow {
                    stock_id: s.id.clone(),
                    ticker: s.ticker.clone(),
                    name: s.name.clone(),
                    sector: s.sector.clone(),
                    price,
                    change_pct,
                    delisted,
                }
            })
            .collect()
    }

    pub fn stock(&self, id: &StockId, tick: u32) -> Result<StockView, ApiError> {
        let s = self.scenario.stock(id).ok_or_else(|| ApiError::not_found("StockNotFound", format!("no stock {id}")))?;
        Ok(StockView {
            stock_id: s.id.clone(),
            ticker: s.ticker.clone(),
            name: s.name.clone(),
            sector: s.sector.clone(),
            float_shares: s.float_shares,
            delisted: s.is_delisted_at(tick),
            tick,
            horizon: self.scenario.horizon,
            history: s
                .price_history
                .iter()
                .filter(|p| p.tick <= tick && p.tick + HISTORY_WINDOW > tick)
                .cloned()
                .collect(),
        })
    }

    pub fn news(&self, tick: u32) -> Vec<NewsView> {
        self.scenario
            .articles_until(tick)
            .map(|a| NewsView {
                article_id: a.id.clone(),
                stock_id: a.stock_id.clone(),
                headline: a.headline.clone(),
                body: a.body.clone(),
                sentiment: a.sentiment,
                source_trust: a.source_trust,
                publish_tick: a.publish_tick,
            })
            .collect()
    }

    pub fn chat(&self, tick: u32) -> Vec<ChatView> {
        self.scenario
            .chat_until(tick)
            .map(|m| ChatView {
                message_id: m.id.clone(),
                author: m.author,
                text: m.text.clone(),
                reply_options: m.reply_options.clone(),
                publish_tick: m.publish_tick,
            })
            .collect()
    }

    pub fn record_events(&self, id: &SessionId, batch: &[ClientEvent]) -> Result<EventsAccepted, ApiError> {
        self.with_session(id, |e| {
            let accepted = e.state.record_batch(&self.scenario, batch)?;
            self.persist(e)?;
            Ok(EventsAccepted { accepted, total_events: e.state.events().len() })
        })
    }

    fn wall_time(state: &SessionState, requested: Option<f64>) -> f64 {
        requested.unwrap_or_else(|| state.events().last().map_or(0.0, |ev| ev.wall_time))
    }

    pub fn trade(&self, id: &SessionId, req: &TradeRequest) -> Result<TradeResult, ApiError> {
        self.with_session(id, |e| {
            let wall_time = Self::wall_time(&e.state, req.wall_time);
            let (fill, _) = e.state.trade(&self.scenario, &req.stock, req.side, req.shares, wall_time)?;
            self.persist(e)?;
            Ok(TradeResult {
                stock_id: fill.stock_id,
                side: fill.side,
                shares: fill.shares,
                price: fill.price,
                cash_delta: fill.cash_delta,
                realized_pnl: fill.realized_pnl,
                portfolio: self.portfolio_view(&e.state),
            })
        })
    }

    pub fn report_fraud(&self, id: &SessionId, req: &ReportRequest) -> Result<ReportResult, ApiError> {
        self.with_session(id, |e| {
            let wall_time = Self::wall_time(&e.state, req.wall_time);
            let before = e.state.portfolio.xp;
            e.state.report_fraud(&self.scenario, &req.stock, wall_time)?;
            self.persist(e)?;
            Ok(ReportResult {
                stock_id: req.stock.clone(),
                xp_awarded: e.state.portfolio.xp as i64 - before as i64,
                portfolio: self.portfolio_view(&e.state),
            })
        })
    }

    pub fn advance(&self, id: &SessionId, ticks: u32) -> Result<ApiSession, ApiError> {
        self.with_session(id, |e| {
            e.state.advance(ticks, &self.scenario);
            e.meta.current_tick = e.state.current_tick;
            self.store.put_meta(&e.meta)?;
            Ok(e.meta.clone())
        })
    }

    /// Moves every session forward by one tick; used by the timed clock.
    pub fn advance_all(&self, ticks: u32) -> Result<(), ApiError> {
        for id in self.session_ids() {
            self.advance(&id, ticks)?;
        }
        Ok(())
    }

    pub fn portfolio(&self, id: &SessionId) -> Result<PortfolioView, ApiError> {
        self.with_session(id, |e| Ok(self.portfolio_view(&e.state)))
    }

    pub fn footprint(&self, id: &SessionId) -> Result<DigitalFootprint, ApiError> {
        self.with_session(id, |e| {
            let mut f = e.state.footprint();
            f.session_id = Some(id.clone());
            Ok(f)
        })
    }

    pub fn analytics(&self, id: &SessionId) -> Result<SessionAnalytics, ApiError> {
        self.with_session(id, |e| {
            let view = self.portfolio_view(&e.state);
            let mut footprint = e.state.footprint();
            footprint.session_id = Some(id.clone());
            Ok(SessionAnalytics {
                session_id: id.clone(),
                tick: e.state.current_tick,
                n_events: e.state.events().len(),
                footprint,
                total_value: view.total_value,
                profit: view.total_value - self.scenario.initial_cash,
                xp: view.xp,
                level: view.level,
            })
        })
    }

    pub fn events(&self, id: &SessionId) -> Result<Vec<SessionEvent>, ApiError> {
        self.with_session(id, |e| Ok(e.state.events().to_vec()))
    }

    /// Current bundle for a session, re-evaluated against the latest footprint.
    pub fn feedback(&self, id: &SessionId) -> Result<FeedbackBundle, ApiError> {
        self.with_session(id, |e| {
            self.refresh_feedback(e)?
                .ok_or_else(|| ApiError::conflict("ModelUnavailable", "no personalization model has been trained"))
        })
    }

    pub fn model(&self) -> Option<Arc<PublishedModel>> {
        self.model.read().expect("model lock").clone()
    }

    /// Replaces the published model; readers see either the old or the new one.
    pub fn publish(&self, model: PublishedModel) {
        *self.model.write().expect("model lock") = Some(Arc::new(model));
    }

    /// Trains on a synthetic cohort without holding any lock, then publishes.
    pub fn train(&self, req: &TrainRequest) -> Result<TrainSummary, ApiError> {
        let mut spec = req.cohort.clone().unwrap_or_else(CohortSpec::default_spec);
        if let Some(seed) = req.cohort_seed {
            spec.seed = seed;
        }
        let config = req.config.clone().unwrap_or_default();
        let cohort = generate_cohort(&spec)?;
        let table = build_training_table(&cohort)?;
        let model = train_pipeline(&table, &config)?;
        let summary = TrainSummary {
            cohort_id: format!("{}-{}", spec.id, spec.seed),
            n_footprints: cohort.len(),
            selected_features: model.selected_features.clone(),
            accuracy: model.classifiers.iter().map(|c| (c.model.kind().short_name().to_string(), c.mean_accuracy)).collect(),
        };
        self.publish(PublishedModel { cohort_id: summary.cohort_id.clone(), cohort, model });
        Ok(summary)
    }

    /// Insight report over the published model's training cohort.
    pub fn report(&self, generated_at: &str) -> Result<InsightReport, ApiError> {
        let published =
            self.model().ok_or_else(|| ApiError::conflict("ModelUnavailable", "train a model before requesting a report"))?;
        Ok(build_report(&published.cohort, &published.cohort_id, Some(&published.model), generated_at)?)
    }
}
