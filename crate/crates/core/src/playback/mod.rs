//! Routing rendered buffers to output devices.
//!
//! A [`Player`] owns an [`AudioBackend`] and enforces one active playback per
//! device: starting a new playback on a busy device stops the old one first.
//! Emission happens on the backend's own clock, pulling samples from a
//! [`SampleSource`] one device period at a time.

mod null;
mod voice;

pub use null::{NullBackend, NullClock, NullDeviceConfig, DEFAULT_PERIOD};
pub use voice::{HandleState, PlaybackHandle};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synth::SampleBuffer;
use voice::Voice;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutputDevice {
    pub index: usize,
    pub name: String,
    /// `None` means any rate is accepted.
    pub max_sample_rate: Option<u32>,
}

impl OutputDevice {
    pub fn supports(&self, sample_rate: u32) -> bool {
        self.max_sample_rate.is_none_or(|max| sample_rate <= max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "ModeRepr", into = "ModeRepr")]
pub enum PlaybackMode {
    /// Emit the buffer once, then stop.
    #[default]
    Once,
    /// Loop seamlessly, with no samples between iterations.
    Continuous,
    /// Loop with `round(gap * fs)` zero samples between iterations.
    Gapped { gap: f64 },
}

pub const DEFAULT_LOOP_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeKind {
    Once,
    Continuous,
    Gapped,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeRepr {
    kind: ModeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

impl TryFrom<ModeRepr> for PlaybackMode {
    type Error = PlaybackError;

    fn try_from(repr: ModeRepr) -> Result<Self, Self::Error> {
        let mode = match (repr.kind, repr.gap) {
            (ModeKind::Once, None) => PlaybackMode::Once,
            (ModeKind::Continuous, None) => PlaybackMode::Continuous,
            (ModeKind::Gapped, gap) => PlaybackMode::Gapped {
                gap: gap.unwrap_or(DEFAULT_LOOP_GAP),
            },
            (_, Some(_)) => {
                return Err(PlaybackError::InvalidMode(
                    "`gap` only applies to gapped loops".into(),
                ))
            }
        };
        mode.validate()?;
        Ok(mode)
    }
}

impl From<PlaybackMode> for ModeRepr {
    fn from(mode: PlaybackMode) -> Self {
        match mode {
            PlaybackMode::Once => ModeRepr { kind: ModeKind::Once, gap: None },
            PlaybackMode::Continuous => ModeRepr { kind: ModeKind::Continuous, gap: None },
            PlaybackMode::Gapped { gap } => ModeRepr { kind: ModeKind::Gapped, gap: Some(gap) },
        }
    }
}

impl PlaybackMode {
    pub fn gapped(gap: f64) -> Self {
        PlaybackMode::Gapped { gap }
    }

    pub fn validate(&self) -> Result<(), PlaybackError> {
        match *self {
            PlaybackMode::Gapped { gap } if !(gap.is_finite() && gap > 0.0) => {
                Err(PlaybackError::InvalidMode(format!(
                    "gapped loop needs a positive gap, got {gap}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaybackError {
    #[error("audio device enumeration failed: {0}")]
    Enumeration(String),
    #[error("no output device with index {0}")]
    NoSuchDevice(usize),
    #[error("device {device} does not accept {sample_rate} Hz (max {max} Hz)")]
    UnsupportedRate {
        device: usize,
        sample_rate: u32,
        max: u32,
    },
    #[error("invalid playback mode: {0}")]
    InvalidMode(String),
    #[error("output device {0} disappeared during playback")]
    Lost(usize),
}

/// Result of one [`SampleSource::render`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rendered {
    /// Samples produced at the front of the output slice. The rest is zeroed.
    pub written: usize,
    /// The source is exhausted or stopped and must not be called again.
    pub finished: bool,
}

/// Producer side of a device stream. Called from the emission thread; must
/// not allocate or block on control-path locks.
pub trait SampleSource: Send {
    fn render(&mut self, out: &mut [f64]) -> Rendered;

    /// The device disappeared; no further `render` calls will follow.
    fn lost(&mut self);
}

/// Platform seam for audio output.
pub trait AudioBackend: Send + Sync {
    fn output_devices(&self) -> Result<Vec<OutputDevice>, PlaybackError>;

    /// Makes `source` the sole producer for `device_index`, dropping any
    /// previous source without further calls to it.
    fn attach(
        &self,
        device_index: usize,
        sample_rate: u32,
        source: Box<dyn SampleSource>,
    ) -> Result<(), PlaybackError>;
}

pub fn list_output_devices(backend: &dyn AudioBackend) -> Result<Vec<OutputDevice>, PlaybackError> {
    backend.output_devices()
}

/// Playback front end with last-writer-wins device arbitration.
pub struct Player {
    backend: Arc<dyn AudioBackend>,
    next_id: AtomicU64,
    active: Mutex<HashMap<usize, PlaybackHandle>>,
}

impl Player {
    pub fn new(backend: Arc<dyn AudioBackend>) -> Self {
        Player {
            backend,
            next_id: AtomicU64::new(1),
            active: Mutex::new(HashMap::new()),
        }
    }

    pub fn backend(&self) -> &Arc<dyn AudioBackend> {
        &self.backend
    }

    pub fn devices(&self) -> Result<Vec<OutputDevice>, PlaybackError> {
        self.backend.output_devices()
    }

    pub fn play(
        &self,
        buffer: &SampleBuffer,
        mode: PlaybackMode,
        device_index: usize,
    ) -> Result<PlaybackHandle, PlaybackError> {
        mode.validate()?;
        let device = self
            .devices()?
            .into_iter()
            .find(|d| d.index == device_index)
            .ok_or(PlaybackError::NoSuchDevice(device_index))?;
        let rate = buffer.sample_rate();
        if !device.supports(rate) {
            return Err(PlaybackError::UnsupportedRate {
                device: device_index,
                sample_rate: rate,
                max: device.max_sample_rate.unwrap_or(u32::MAX),
            });
        }

        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (voice, handle) = Voice::new(id, device_index, buffer, mode);

        let mut active = self.active.lock();
        if let Some(previous) = active.remove(&device_index) {
            previous.stop();
        }
        self.backend.attach(device_index, rate, Box::new(voice))?;
        active.insert(device_index, handle.clone());
        Ok(handle)
    }

    /// Idempotent.
    pub fn stop(&self, handle: &PlaybackHandle) {
        handle.stop();
        let mut active = self.active.lock();
        if active.get(&handle.device()).is_some_and(|h| h.id() == handle.id()) {
            active.remove(&handle.device());
        }
    }

    /// Handle currently attached to `device_index`, if still playing.
    pub fn active(&self, device_index: usize) -> Option<PlaybackHandle> {
        self.active
            .lock()
            .get(&device_index)
            .filter(|h| h.state() == HandleState::Playing)
            .cloned()
    }
}
