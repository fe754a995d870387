//! Deterministic waveform rendering.
//!
//! Everything here is a pure function of its inputs: identical specs render
//! to bit-identical buffers on the same platform.

mod buffer;
mod envelope;
mod metrics;
mod render;
mod shape;
mod spec;

pub use buffer::SampleBuffer;
pub use envelope::{envelope_gain, Envelope, EnvelopeKind, DEFAULT_EXPONENT};
pub use metrics::{decimate_min_max, waveform_metrics, WaveformMetrics, MAX_PREVIEW_BUCKETS};
pub use render::{assemble_program, render_band_limited, render_wave};
pub use shape::{oscillator_sample, WaveShape};
pub use spec::{
    amplitude_from_percent, StimulusProgram, WaveformSpec, DEFAULT_AMPLITUDE, DEFAULT_DURATION,
    DEFAULT_FREQUENCY, DEFAULT_GAP, DEFAULT_SAMPLE_RATE, MAX_RENDER_SAMPLES,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("phase {0} outside [0, 1)")]
    PhaseOutOfRange(f64),
    #[error("time {t} s outside [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("amplitude percent {0} outside 0..=100")]
    PercentOutOfRange(u32),
    #[error("{field}: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("frequency {frequency} Hz exceeds the Nyquist limit of {sample_rate} Hz sampling")]
    Nyquist { frequency: f64, sample_rate: u32 },
    #[error("duration {duration} s renders to zero samples at {sample_rate} Hz")]
    DegenerateDuration { duration: f64, sample_rate: u32 },
    #[error("sample {index} = {value} outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("buffer is empty")]
    EmptyBuffer,
}

impl SynthError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SynthError::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefixes the offending field path with `parent`.
    pub fn nested(self, parent: &str) -> Self {
        match self {
            SynthError::InvalidSpec { field, reason } => SynthError::InvalidSpec {
                field: format!("{parent}.{field}"),
                reason,
            },
            other => match other.field() {
                Some(field) => SynthError::InvalidSpec {
                    field: format!("{parent}.{field}"),
                    reason: other.to_string(),
                },
                None => other,
            },
        }
    }

    /// Dotted path of the parameter at fault, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            SynthError::InvalidSpec { field, .. } => Some(field),
            SynthError::Nyquist { .. } => Some("frequency"),
            SynthError::DegenerateDuration { .. } => Some("duration"),
            SynthError::PercentOutOfRange(_) => Some("amplitude"),
            SynthError::PhaseOutOfRange(_) => Some("phase"),
            SynthError::TimeOutOfRange { .. } => Some("t"),
            SynthError::SampleOutOfRange { .. } => Some("samples"),
            SynthError::EmptyBuffer => None,
        }
    }
}
