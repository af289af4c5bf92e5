use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use openprobe::bn::BnError;
use openprobe::engine::EngineError;
use openprobe::report::ReportError;
use serde::Serialize;

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")).with_field("id")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::UnsupportedMode { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "unsupported_mode", message).with_field("mode")
            }
            EngineError::WrongPhase { .. } => ApiError::new(StatusCode::CONFLICT, "wrong_phase", message),
            EngineError::UnknownSymptom(s) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_symptom", message).with_field(s)
            }
            EngineError::UnknownState { variable, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_state", message).with_field(variable)
            }
            EngineError::AlreadyObserved(s) => {
                ApiError::new(StatusCode::CONFLICT, "already_observed", message).with_field(s)
            }
            EngineError::NoParameters(_) => ApiError::new(StatusCode::CONFLICT, "no_parameters", message),
            EngineError::Network(BnError::ImpossibleEvidence)
            | EngineError::Report(ReportError::Network(BnError::ImpossibleEvidence)) => {
                ApiError::new(StatusCode::CONFLICT, "impossible_evidence", message)
            }
            EngineError::Network(BnError::UnknownState { variable, .. }) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_state", message).with_field(variable)
            }
            _ => ApiError::internal(message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.body_text())
    }
}
