use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use vibrobench_core::experiment::StoreError;
use vibrobench_core::playback::PlaybackError;
use vibrobench_core::schema::SchemaError;
use vibrobench_core::synth::SynthError;
use vibrobench_core::ExperimentError;

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    /// `validation`, `illegal_transition`, `domain`, `not_found`, `device`,
    /// `storage` or `internal`.
    pub code: String,
    /// Dotted path of the offending input (`"."` when none applies).
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(
        status: StatusCode,
        code: &str,
        path: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.into(),
                path: path.into(),
                message: message.into(),
            },
        }
    }

    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "validation", path, message)
    }

    pub fn not_found(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", path, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", ".", message)
    }

    /// A synthesis error for the waveform or program at `prefix` in the request.
    pub fn synth(prefix: &str, err: SynthError) -> Self {
        let path = match err.field() {
            Some(field) => format!("{prefix}.{field}"),
            None => prefix.to_string(),
        };
        let message = match &err {
            SynthError::InvalidSpec { reason, .. } => reason.clone(),
            other => other.to_string(),
        };
        Self::validation(path, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<SchemaError> for ApiError {
    fn from(err: SchemaError) -> Self {
        ApiError::validation(err.path, err.message)
    }
}

impl From<ExperimentError> for ApiError {
    fn from(err: ExperimentError) -> Self {
        let status = match err {
            ExperimentError::Validation { .. } => StatusCode::BAD_REQUEST,
            ExperimentError::IllegalTransition { .. } => StatusCode::CONFLICT,
            ExperimentError::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let message = match &err {
            ExperimentError::Validation { message, .. } => message.clone(),
            other => other.to_string(),
        };
        ApiError::new(status, err.code(), err.path(), message)
    }
}

impl From<PlaybackError> for ApiError {
    fn from(err: PlaybackError) -> Self {
        let (status, path) = match err {
            PlaybackError::InvalidMode(reason) => return ApiError::validation("mode", reason),
            PlaybackError::NoSuchDevice(_) => (StatusCode::NOT_FOUND, "device_index"),
            PlaybackError::UnsupportedRate { .. } => (StatusCode::CONFLICT, "device_index"),
            PlaybackError::Lost(_) => (StatusCode::CONFLICT, "device_index"),
            PlaybackError::Enumeration(_) => (StatusCode::SERVICE_UNAVAILABLE, "."),
        };
        ApiError::new(status, "device", path, err.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", ".", err.to_string())
    }
}
