use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

/// Error body: `{"error": {"code", "message", "details"?}}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).ok();
        self
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<outfit_core::Error> for ApiError {
    fn from(e: outfit_core::Error) -> Self {
        use outfit_core::Error as E;
        match &e {
            E::UnknownItem(_) => ApiError::not_found("unknown_item", e.to_string()),
            E::UnknownOccasion(_) => ApiError::bad_request("unknown_occasion", e.to_string()),
            E::DuplicateId(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_id", e.to_string()),
            E::Validation(_) | E::Parse { .. } | E::AtLine { .. } | E::UnknownCategory(_) | E::NoStyleTags => {
                ApiError::bad_request("validation_failed", e.to_string())
            }
            E::EmptyText => ApiError::bad_request("empty_text", e.to_string()),
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.details {
            body["details"] = d;
        }
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
