use serde::{Deserialize, Serialize};

use super::{Envelope, SynthError, WaveShape};

pub const DEFAULT_FREQUENCY: f64 = 200.0;
pub const DEFAULT_DURATION: f64 = 0.3;
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_GAP: f64 = 0.1;

/// Upper bound on the number of samples a single render may produce
/// (about 50 minutes at 44.1 kHz).
pub const MAX_RENDER_SAMPLES: u64 = 1 << 27;

/// Complete parameterization of one rendered waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSpec {
    #[serde(default)]
    pub shape: WaveShape,
    /// Hz.
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    /// Linear gain in `[0, 1]`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
}

fn default_frequency() -> f64 {
    DEFAULT_FREQUENCY
}
fn default_amplitude() -> f64 {
    DEFAULT_AMPLITUDE
}
fn default_duration() -> f64 {
    DEFAULT_DURATION
}
fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_gap() -> f64 {
    DEFAULT_GAP
}
fn default_repeats() -> u32 {
    1
}

impl Default for WaveformSpec {
    fn default() -> Self {
        WaveformSpec {
            shape: WaveShape::Sine,
            frequency: DEFAULT_FREQUENCY,
            amplitude: DEFAULT_AMPLITUDE,
            duration: DEFAULT_DURATION,
            envelope: Envelope::None,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl WaveformSpec {
    pub fn new(shape: WaveShape) -> Self {
        WaveformSpec {
            shape,
            ..Default::default()
        }
    }

    pub fn with_frequency(mut self, hz: f64) -> Self {
        self.frequency = hz;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_duration(mut self, seconds: f64) -> Self {
        self.duration = seconds;
        self
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn with_sample_rate(mut self, hz: u32) -> Self {
        self.sample_rate = hz;
        self
    }

    /// Number of samples one rendering produces: `round(duration * sample_rate)`,
    /// halves rounded away from zero.
    pub fn sample_count(&self) -> u64 {
        seconds_to_samples(self.duration, self.sample_rate)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(SynthError::invalid(
                "frequency",
                format!("must be a positive number of Hz, got {}", self.frequency),
            ));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(SynthError::invalid(
                "amplitude",
                format!("must lie in [0, 1], got {}", self.amplitude),
            ));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SynthError::invalid(
                "duration",
                format!("must be a positive number of seconds, got {}", self.duration),
            ));
        }
        if self.sample_rate == 0 {
            return Err(SynthError::invalid("sample_rate", "must be positive"));
        }
        if (self.sample_rate as f64) < 2.0 * self.frequency {
            return Err(SynthError::Nyquist {
                frequency: self.frequency,
                sample_rate: self.sample_rate,
            });
        }
        self.envelope.validate()?;
        let n = self.sample_count();
        if n == 0 {
            return Err(SynthError::DegenerateDuration {
                duration: self.duration,
                sample_rate: self.sample_rate,
            });
        }
        if n > MAX_RENDER_SAMPLES {
            return Err(SynthError::invalid(
                "duration",
                format!("renders {n} samples, limit is {MAX_RENDER_SAMPLES}"),
            ));
        }
        Ok(())
    }
}

pub(crate) fn seconds_to_samples(seconds: f64, sample_rate: u32) -> u64 {
    // f64::round is half-away-from-zero.
    (seconds * sample_rate as f64).round() as u64
}

/// A waveform repeated `repeats` times with `gap` seconds of silence between
/// repetitions (never after the last one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusProgram {
    pub id: String,
    pub waveform: WaveformSpec,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Free text, e.g. a measured peak acceleration. Never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

impl StimulusProgram {
    pub fn new(id: impl Into<String>, waveform: WaveformSpec) -> Self {
        StimulusProgram {
            id: id.into(),
            waveform,
            repeats: 1,
            gap: DEFAULT_GAP,
            annotation: None,
        }
    }

    pub fn with_repeats(mut self, repeats: u32) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_gap(mut self, seconds: f64) -> Self {
        self.gap = seconds;
        self
    }

    pub fn with_annotation(mut self, text: impl Into<String>) -> Self {
        self.annotation = Some(text.into());
        self
    }

    pub fn gap_samples(&self) -> u64 {
        seconds_to_samples(self.gap, self.waveform.sample_rate)
    }

    /// `repeats * N + (repeats - 1) * G`.
    pub fn total_samples(&self) -> u64 {
        let reps = u64::from(self.repeats);
        reps * self.waveform.sample_count() + reps.saturating_sub(1) * self.gap_samples()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.id.is_empty() {
            return Err(SynthError::invalid("id", "must not be empty"));
        }
        self.waveform.validate().map_err(|e| e.nested("waveform"))?;
        if self.repeats == 0 {
            return Err(SynthError::invalid("repeats", "must be at least 1"));
        }
        if !(self.gap.is_finite() && self.gap >= 0.0) {
            return Err(SynthError::invalid(
                "gap",
                format!("must be a non-negative number of seconds, got {}", self.gap),
            ));
        }
        if self.total_samples() > MAX_RENDER_SAMPLES {
            return Err(SynthError::invalid(
                "repeats",
                format!("program exceeds {MAX_RENDER_SAMPLES} samples"),
            ));
        }
        Ok(())
    }
}

/// Maps keyboard entry 0..=100 onto an amplitude in `[0, 1]`.
pub fn amplitude_from_percent(percent: u32) -> Result<f64, SynthError> {
    if percent > 100 {
        return Err(SynthError::PercentOutOfRange(percent));
    }
    Ok(f64::from(percent) / 100.0)
}
