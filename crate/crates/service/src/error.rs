use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};
use vizrec_core::{DatasetError, EmitError, EncodingError, RecommenderError};

/// Error body: `{"code", "message", "context"}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub context: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
            context: json!({}),
        }
    }

    pub fn with_context(mut self, context: Value) -> ApiError {
        self.context = context;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn session_not_found(id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "session_not_found", "no such session")
            .with_context(json!({ "session": id }))
    }

    pub fn session_expired(id: &str) -> ApiError {
        ApiError::new(StatusCode::GONE, "session_expired", "session expired")
            .with_context(json!({ "session": id }))
    }

    pub fn payload_too_large(limit: usize) -> ApiError {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("upload exceeds {limit} bytes"),
        )
        .with_context(json!({ "limit": limit }))
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "code": self.code,
            "message": self.message,
            "context": self.context,
        });
        (self.status, Json(body)).into_response()
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let message = e.to_string();
        match e {
            DatasetError::UnknownVariable(name) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_variable", message)
                    .with_context(json!({ "variable": name }))
            }
            DatasetError::UnknownType(value) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_type", message)
                    .with_context(json!({ "value": value }))
            }
            DatasetError::RaggedRow { row, expected, found } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_dataset", message)
                    .with_context(json!({ "row": row, "expected": expected, "found": found }))
            }
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_dataset", message),
        }
    }
}

impl From<EncodingError> for ApiError {
    fn from(e: EncodingError) -> Self {
        let message = e.to_string();
        let unprocessable = |code| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message.clone());
        match e {
            EncodingError::ChannelUnavailable(channel) => {
                ApiError::new(StatusCode::CONFLICT, "channel_unavailable", message)
                    .with_context(json!({ "channel": channel }))
            }
            EncodingError::Gating => ApiError::new(StatusCode::CONFLICT, "gating", message),
            EncodingError::UnknownVariable(name) => unprocessable("unknown_variable")
                .with_context(json!({ "variable": name })),
            EncodingError::InvalidFilter { variable, .. } => {
                unprocessable("invalid_filter").with_context(json!({ "variable": variable }))
            }
            EncodingError::InvalidModifier { channel, .. } => {
                unprocessable("invalid_modifier").with_context(json!({ "channel": channel }))
            }
            EncodingError::IncompatibleChannel { channel, var_type } => {
                unprocessable("incompatible_channel")
                    .with_context(json!({ "channel": channel, "type": var_type }))
            }
            EncodingError::NoMapping => unprocessable("no_mapping"),
            EncodingError::Parse { kind, value } => {
                unprocessable("parse").with_context(json!({ "kind": kind, "value": value }))
            }
        }
    }
}

impl From<RecommenderError> for ApiError {
    fn from(e: RecommenderError) -> Self {
        match e {
            RecommenderError::Encoding(e) => e.into(),
            RecommenderError::UnknownVariable(name) => {
                EncodingError::UnknownVariable(name).into()
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<EmitError> for ApiError {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::Malformed(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_spec", e.to_string())
            }
            EmitError::DanglingField(ref field) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_variable", e.to_string())
                    .with_context(json!({ "variable": field }))
            }
        }
    }
}
