use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evtrack_core::analysis::AnalysisError;
use evtrack_core::connection::ConnectionError;
use evtrack_core::evidence_map::EvidenceMapError;
use evtrack_core::geometry::GeometryError;
use evtrack_core::scenario::ScenarioError;
use serde::Serialize;
use thiserror::Error;

/// Error bodies are `{"error": message, "field": name-or-null}`.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{message}")]
    BadRequest { message: String, field: Option<String> },
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{message}")]
    Unprocessable { message: String, field: Option<String> },
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct Body<'a> {
    error: String,
    field: Option<&'a str>,
}

impl ApiError {
    pub fn bad(field: &str, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            message: message.into(),
            field: Some(field.into()),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ApiError::BadRequest { field, .. } | ApiError::Unprocessable { field, .. } => field.as_deref(),
            _ => None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.to_string(),
            field: self.field(),
        };
        (self.status(), Json(body)).into_response()
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let field = e.field().map(String::from);
        match e {
            ScenarioError::NoSubmarineType => ApiError::Unprocessable {
                message: e.to_string(),
                field,
            },
            ScenarioError::Io { .. } => ApiError::Internal(e.to_string()),
            _ => ApiError::BadRequest {
                message: e.to_string(),
                field,
            },
        }
    }
}

impl From<ConnectionError> for ApiError {
    fn from(e: ConnectionError) -> Self {
        match e {
            ConnectionError::Scenario(e) => e.into(),
            e => ApiError::Unprocessable {
                message: e.to_string(),
                field: None,
            },
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidParameter { ref name, .. } => ApiError::BadRequest {
                field: Some(name.clone()),
                message: e.to_string(),
            },
            e => ApiError::Unprocessable {
                message: e.to_string(),
                field: None,
            },
        }
    }
}

impl From<EvidenceMapError> for ApiError {
    fn from(e: EvidenceMapError) -> Self {
        match e {
            EvidenceMapError::Scenario(e) => e.into(),
            EvidenceMapError::InvalidParams { ref field, .. } => ApiError::BadRequest {
                field: Some(field.clone()),
                message: e.to_string(),
            },
            e => ApiError::Unprocessable {
                field: e.field().map(String::from),
                message: e.to_string(),
            },
        }
    }
}

impl From<GeometryError> for ApiError {
    fn from(e: GeometryError) -> Self {
        let field = match &e {
            GeometryError::OutOfBounds { which, .. } | GeometryError::EndpointBlocked { which, .. } => Some(which.to_string()),
            _ => None,
        };
        ApiError::Unprocessable {
            message: e.to_string(),
            field,
        }
    }
}
