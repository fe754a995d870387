//! Request and response bodies. Every body carries `"v": 1`; requests are
//! strict (unknown fields rejected with their path).

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use vibrobench_core::experiment::{Cue, RankAggregate, SessionRecord, StimulusBattery};
use vibrobench_core::playback::{OutputDevice, PlaybackMode};
use vibrobench_core::schema::{check_version, from_json, WIRE_VERSION};
use vibrobench_core::synth::{StimulusProgram, WaveformMetrics, WaveformSpec};
use vibrobench_core::{ExperimentSession, Phase};

use crate::error::ApiError;

/// Default number of min/max preview buckets.
pub const DEFAULT_PREVIEW_BUCKETS: usize = 1000;

pub trait Versioned {
    fn version(&self) -> u32;
}

/// Strictly decodes a request body. An empty body is read as `{"v":1}` so
/// that endpoints whose fields are all optional can be called bare.
pub fn parse_body<T: DeserializeOwned + Versioned>(bytes: &[u8]) -> Result<T, ApiError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| ApiError::validation(".", "request body is not UTF-8"))?;
    let text = if text.trim().is_empty() { r#"{"v":1}"# } else { text };
    let body: T = from_json(text)?;
    check_version(body.version())?;
    Ok(body)
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn version(&self) -> u32 {
                self.v
            }
        })*
    };
}

versioned!(
    RenderRequest,
    PlayRequest,
    StopRequest,
    CreateSessionRequest,
    CueRequest,
    RankingRequest
);

fn v1() -> u32 {
    WIRE_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub v: u32,
    pub status: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DevicesResponse {
    pub v: u32,
    pub devices: Vec<OutputDevice>,
}

/// `POST /render`: exactly one of `waveform` or `program`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveform: Option<WaveformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<StimulusProgram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview_buckets: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderResponse {
    pub v: u32,
    /// Content hash of the canonical spec; `GET /render/{buffer_id}.wav`.
    pub buffer_id: String,
    /// The waveform or program as rendered, with every default filled in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveform: Option<WaveformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<StimulusProgram>,
    pub sample_rate: u32,
    pub samples: usize,
    pub duration: f64,
    pub metrics: WaveformMetrics,
    /// `[min, max]` per bucket, in time order.
    pub preview: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayRequest {
    pub v: u32,
    pub buffer_id: String,
    #[serde(default)]
    pub mode: PlaybackMode,
    #[serde(default)]
    pub device_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRequest {
    pub v: u32,
    pub handle_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandleStateWire {
    Playing,
    Stopped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandleStatus {
    pub v: u32,
    pub handle_id: u64,
    pub device_index: usize,
    pub state: HandleStateWire,
    pub emitted_samples: u64,
    pub completed_iterations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub v: u32,
    /// Preset name (`"paper"`) or an inline battery; parsed separately so
    /// errors carry precise paths.
    pub battery: serde_json::Value,
    pub participant: String,
    /// Drawn at random when absent; always recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Body of `advance` / `confirm-advance`; with `device_index` the cued
/// program is also played once on that device.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueRequest {
    #[serde(default = "v1")]
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_index: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingRequest {
    pub v: u32,
    /// Battery indices, strongest first.
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub v: u32,
    pub session: ExperimentSession,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue: Option<Cue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<SessionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub participant: String,
    pub battery_id: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionList {
    pub v: u32,
    pub sessions: Vec<SessionSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetResponse {
    pub v: u32,
    pub name: String,
    pub battery_id: String,
    pub battery: StimulusBattery,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateResponse {
    pub v: u32,
    pub aggregate: RankAggregate,
    /// Tab-separated table, one row per stimulus.
    pub table: String,
}

/// Messages on `GET /sessions/{id}/events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEventMessage {
    /// Sent once on connect so clients resynchronize their phase gating.
    Snapshot { v: u32, session: Box<ExperimentSession> },
    Phase {
        v: u32,
        session_id: String,
        phase: Phase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cue: Option<Cue>,
    },
    Playback {
        v: u32,
        session_id: String,
        handle_id: u64,
        device_index: usize,
        stimulus: String,
        state: HandleStateWire,
    },
}
