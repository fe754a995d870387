use std::fmt;
use std::path::Path;

use serde::Serialize;
use vibrobench_core::experiment::StoreError;
use vibrobench_core::playback::PlaybackError;
use vibrobench_core::synth::SynthError;
use vibrobench_core::wav::WavError;
use vibrobench_core::ExperimentError;

/// Same shape as the service's error bodies.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub code: String,
    pub path: String,
    pub message: String,
}

pub type CliResult<T = ()> = Result<T, CliError>;

impl CliError {
    pub fn new(code: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::new("io", path.display().to_string(), err.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        let path = err.field().unwrap_or(".").to_string();
        let message = match &err {
            SynthError::InvalidSpec { reason, .. } => reason.clone(),
            other => other.to_string(),
        };
        CliError::new("validation", path, message)
    }
}

impl From<ExperimentError> for CliError {
    fn from(err: ExperimentError) -> Self {
        let message = match &err {
            ExperimentError::Validation { message, .. } => message.clone(),
            other => other.to_string(),
        };
        CliError::new(err.code(), err.path(), message)
    }
}

impl From<PlaybackError> for CliError {
    fn from(err: PlaybackError) -> Self {
        let path = match err {
            PlaybackError::InvalidMode(_) => "mode",
            PlaybackError::Enumeration(_) => ".",
            _ => "device",
        };
        CliError::new("device", path, err.to_string())
    }
}

impl From<WavError> for CliError {
    fn from(err: WavError) -> Self {
        CliError::new("wav", err.field(), err.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(err: StoreError) -> Self {
        CliError::new("storage", ".", err.to_string())
    }
}
