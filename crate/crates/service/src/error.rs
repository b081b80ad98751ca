use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use dsage_core::inference::InferenceError;
use dsage_core::kb::{IssueKind, KbError};
use dsage_store::StoreError;
use serde::Serialize;
use serde_json::Value;

use crate::json::Pretty;

/// The closed set of machine-readable error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidRequest,
    NotFound,
    MethodNotAllowed,
    KbConflict,
    UnknownIndicator,
    IllegalState,
    InvalidRule,
    PreconditionRequired,
    StorageError,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 9] = [
        ErrorCode::InvalidRequest,
        ErrorCode::NotFound,
        ErrorCode::MethodNotAllowed,
        ErrorCode::KbConflict,
        ErrorCode::UnknownIndicator,
        ErrorCode::IllegalState,
        ErrorCode::InvalidRule,
        ErrorCode::PreconditionRequired,
        ErrorCode::StorageError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::InvalidRequest => "invalid_request",
            ErrorCode::NotFound => "not_found",
            ErrorCode::MethodNotAllowed => "method_not_allowed",
            ErrorCode::KbConflict => "kb_conflict",
            ErrorCode::UnknownIndicator => "unknown_indicator",
            ErrorCode::IllegalState => "illegal_state",
            ErrorCode::InvalidRule => "invalid_rule",
            ErrorCode::PreconditionRequired => "precondition_required",
            ErrorCode::StorageError => "storage_error",
        }
    }

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::InvalidRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::MethodNotAllowed => StatusCode::METHOD_NOT_ALLOWED,
            ErrorCode::KbConflict => StatusCode::CONFLICT,
            ErrorCode::UnknownIndicator | ErrorCode::IllegalState | ErrorCode::InvalidRule => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorCode::PreconditionRequired => StatusCode::PRECONDITION_REQUIRED,
            ErrorCode::StorageError => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).ok();
        self
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidRequest, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::StorageError {
            tracing::error!(message = %self.message, "storage failure");
        }
        (self.code.status(), Pretty(self)).into_response()
    }
}

impl From<InferenceError> for ApiError {
    fn from(e: InferenceError) -> Self {
        let code = match &e {
            InferenceError::UnknownIndicator(_) => ErrorCode::UnknownIndicator,
            InferenceError::IllegalState { .. } => ErrorCode::IllegalState,
            InferenceError::UnknownHypothesis(_) => ErrorCode::InvalidRequest,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        match &e {
            KbError::Invalid(report) => {
                let code = if report.kinds().contains(&IssueKind::UnknownIndicator) {
                    ErrorCode::UnknownIndicator
                } else {
                    ErrorCode::InvalidRule
                };
                ApiError::new(code, e.to_string()).with_detail(&report.issues)
            }
            KbError::UnknownRule(_) | KbError::UnknownIndicator(_) => {
                ApiError::new(ErrorCode::NotFound, e.to_string())
            }
            _ => ApiError::new(ErrorCode::InvalidRule, e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownSession(_) => ApiError::new(ErrorCode::NotFound, e.to_string()),
            StoreError::Conflict { ref current, .. } => {
                let detail = serde_json::json!({ "current_version": current.as_ref().map(|v| v.as_str()) });
                ApiError::new(ErrorCode::KbConflict, e.to_string()).with_detail(detail)
            }
            StoreError::Kb(k) => k.into(),
            StoreError::Observation(o) => o.into(),
            other => ApiError::new(ErrorCode::StorageError, other.to_string()),
        }
    }
}
