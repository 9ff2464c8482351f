//! `/v1` JSON routes over [`Service`].

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use fraudaware_core::analytics::InsightReport;
use fraudaware_core::personalize::FeedbackBundle;
use fraudaware_core::session::{ClientEvent, SessionEvent, SessionId};
use fraudaware_core::simkit::StockId;

use crate::error::ApiError;
use crate::service::{
    ChatView, EventsAccepted, MarketRow, NewsView, PortfolioView, ReportRequest, ReportResult, Service,
    SessionAnalytics, SessionCreated, StockView, TradeRequest, TradeResult, TrainRequest, TrainSummary,
};
use crate::store::ApiSession;

type AppState = Arc<Service>;
type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub age: u32,
}

#[derive(Debug, Default, Deserialize)]
pub struct ViewQuery {
    pub session: Option<String>,
    pub tick: Option<u32>,
}

#[derive(Debug, Deserialize)]
pub struct AdvanceRequest {
    #[serde(default = "one")]
    pub ticks: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Default, Deserialize)]
pub struct ReportQuery {
    pub generated_at: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub scenario_id: String,
    pub model_loaded: bool,
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::validation(e.body_text()))
}

fn query<T: Default>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::validation(e.body_text()))
}

fn view_tick(svc: &Service, q: &ViewQuery) -> Result<u32, ApiError> {
    let session = q.session.as_deref().map(SessionId::new);
    svc.view_tick(session.as_ref(), q.tick)
}

/// Runs a service call on the blocking pool so file I/O and training stay off the reactor.
async fn blocking<T: Send + 'static>(
    svc: AppState,
    f: impl FnOnce(&Service) -> Result<T, ApiError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError::new(500, "InternalError", e.to_string()))?
        .map(Json)
}

async fn health(State(svc): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok", scenario_id: svc.scenario_id().to_string(), model_loaded: svc.model().is_some() })
}

async fn create_session(
    State(svc): State<AppState>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<SessionCreated> {
    let req = body(payload)?;
    blocking(svc, move |s| s.create_session(req.age)).await
}

async fn get_session(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<ApiSession> {
    svc.session(&SessionId::new(id)).map(Json)
}

async fn market(State(svc): State<AppState>, q: Result<Query<ViewQuery>, QueryRejection>) -> ApiResult<Vec<MarketRow>> {
    let q = query(q)?;
    Ok(Json(svc.market(view_tick(&svc, &q)?)))
}

async fn stock(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<ViewQuery>, QueryRejection>,
) -> ApiResult<StockView> {
    let q = query(q)?;
    svc.stock(&StockId::new(id), view_tick(&svc, &q)?).map(Json)
}

async fn news(State(svc): State<AppState>, q: Result<Query<ViewQuery>, QueryRejection>) -> ApiResult<Vec<NewsView>> {
    let q = query(q)?;
    Ok(Json(svc.news(view_tick(&svc, &q)?)))
}

async fn chat(State(svc): State<AppState>, q: Result<Query<ViewQuery>, QueryRejection>) -> ApiResult<Vec<ChatView>> {
    let q = query(q)?;
    Ok(Json(svc.chat(view_tick(&svc, &q)?)))
}

async fn post_events(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<Vec<ClientEvent>>, JsonRejection>,
) -> ApiResult<EventsAccepted> {
    let batch = body(payload)?;
    blocking(svc, move |s| s.record_events(&SessionId::new(id), &batch)).await
}

async fn get_events(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<SessionEvent>> {
    svc.events(&SessionId::new(id)).map(Json)
}

async fn trade(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<TradeRequest>, JsonRejection>,
) -> ApiResult<TradeResult> {
    let req = body(payload)?;
    blocking(svc, move |s| s.trade(&SessionId::new(id), &req)).await
}

async fn report_fraud(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ReportRequest>, JsonRejection>,
) -> ApiResult<ReportResult> {
    let req = body(payload)?;
    blocking(svc, move |s| s.report_fraud(&SessionId::new(id), &req)).await
}

async fn advance(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<AdvanceRequest>, JsonRejection>,
) -> ApiResult<ApiSession> {
    let req = body(payload)?;
    blocking(svc, move |s| s.advance(&SessionId::new(id), req.ticks)).await
}

async fn portfolio(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<PortfolioView> {
    svc.portfolio(&SessionId::new(id)).map(Json)
}

async fn analytics(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionAnalytics> {
    svc.analytics(&SessionId::new(id)).map(Json)
}

async fn feedback(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<FeedbackBundle> {
    blocking(svc, move |s| s.feedback(&SessionId::new(id))).await
}

async fn train(
    State(svc): State<AppState>,
    payload: Result<Json<TrainRequest>, JsonRejection>,
) -> ApiResult<TrainSummary> {
    let req = body(payload)?;
    blocking(svc, move |s| s.train(&req)).await
}

async fn report(State(svc): State<AppState>, q: Result<Query<ReportQuery>, QueryRejection>) -> ApiResult<InsightReport> {
    let q = query(q)?;
    let generated_at = q.generated_at.unwrap_or_else(|| "unspecified".to_string());
    blocking(svc, move |s| s.report(&generated_at)).await
}

async fn fallback() -> ApiError {
    ApiError::not_found("RouteNotFound", "no such route")
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/events", post(post_events).get(get_events))
        .route("/v1/sessions/{id}/trades", post(trade))
        .route("/v1/sessions/{id}/report-fraud", post(report_fraud))
        .route("/v1/sessions/{id}/advance", post(advance))
        .route("/v1/sessions/{id}/portfolio", get(portfolio))
        .route("/v1/sessions/{id}/analytics", get(analytics))
        .route("/v1/sessions/{id}/feedback", get(feedback))
        .route("/v1/market", get(market))
        .route("/v1/stocks/{id}", get(stock))
        .route("/v1/news", get(news))
        .route("/v1/chat", get(chat))
        .route("/v1/admin/train", post(train))
        .route("/v1/admin/report", get(report))
        .fallback(fallback)
        .with_state(service)
}

/// Serves until ctrl-c. With `tick_every`, every session's clock advances on that period.
pub async fn serve(service: Arc<Service>, addr: SocketAddr, tick_every: Option<Duration>) -> std::io::Result<()> {
    if let Some(period) = tick_every {
        let svc = service.clone();
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            interval.tick().await;
            loop {
                interval.tick().await;
                let svc = svc.clone();
                let res = tokio::task::spawn_blocking(move || svc.advance_all(1)).await;
                if let Ok(Err(e)) = res {
                    tracing::warn!("timed advance failed: {e}");
                }
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
