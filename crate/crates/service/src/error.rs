use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

use sca_core::gateway::GatewayError;
use sca_core::profile::ProfileError;

use crate::session::Phase;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("the session is decided and read-only")]
    SessionClosed,
    #[error("{operation} is not allowed in phase {phase:?}")]
    WrongPhase { phase: Phase, operation: String },
    #[error("both items are labelled {0:?}")]
    DuplicateItems(String),
    #[error("a decision is already recorded for this session")]
    DoubleRecord,
    #[error("{0}")]
    InvalidRequest(String),
    #[error("missing or wrong bearer token")]
    Unauthorized,
    #[error("model call failed: {0}")]
    Gateway(#[from] GatewayError),
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownProfile(_) => "UnknownProfile",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::SessionClosed => "SessionClosed",
            ServiceError::WrongPhase { .. } => "WrongPhase",
            ServiceError::DuplicateItems(_) => "DuplicateItems",
            ServiceError::DoubleRecord => "DoubleRecord",
            ServiceError::InvalidRequest(_) => "InvalidRequest",
            ServiceError::Unauthorized => "Unauthorized",
            ServiceError::Gateway(_) => "GatewayError",
            ServiceError::Storage(_) => "StorageError",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownProfile(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionClosed | ServiceError::WrongPhase { .. } | ServiceError::DoubleRecord => StatusCode::CONFLICT,
            ServiceError::DuplicateItems(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::Gateway(GatewayError::UnsupportedImage(_)) => StatusCode::BAD_REQUEST,
            ServiceError::Gateway(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ProfileError> for ServiceError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::UnknownProfile(id) => ServiceError::UnknownProfile(id),
            other => ServiceError::Storage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail { code: self.code(), message: self.to_string() },
        };
        (self.status(), Json(body)).into_response()
    }
}
