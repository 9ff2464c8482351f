use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use fraudaware_core::analytics::AnalyticsError;
use fraudaware_core::personalize::PersonalizeError;
use fraudaware_core::session::{SessionError, TradeError};

/// Error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(400, "ValidationError", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(404, code, message)
    }

    pub fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(409, code, message)
    }

    pub fn storage(message: impl Into<String>) -> Self {
        Self::new(500, "StorageError", message)
    }
}

impl From<TradeError> for ApiError {
    fn from(e: TradeError) -> Self {
        let status = if e.code() == "ValidationError" { 400 } else { 409 };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Trade(t) => t.into(),
            SessionError::Telemetry(t) => ApiError::new(422, "TelemetryNesting", t.to_string()),
            SessionError::Validation(m) => ApiError::validation(m),
            SessionError::Corrupt(m) => ApiError::new(500, "CorruptLog", m),
        }
    }
}

impl From<PersonalizeError> for ApiError {
    fn from(e: PersonalizeError) -> Self {
        match e {
            PersonalizeError::Config(_) | PersonalizeError::Schema { .. } | PersonalizeError::Empty => {
                ApiError::validation(e.to_string())
            }
            other => ApiError::new(500, "TrainingFailed", other.to_string()),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Spec(_) => ApiError::validation(e.to_string()),
            other => ApiError::new(500, "ReportFailed", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = serde_json::json!({ "error": ErrorBody { code: self.code.to_string(), message: self.message } });
        (status, Json(body)).into_response()
    }
}
