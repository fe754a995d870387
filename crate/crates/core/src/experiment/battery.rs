use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::schema::content_id;
use crate::synth::{Envelope, StimulusProgram, WaveShape, WaveformSpec, DEFAULT_EXPONENT};

/// Ordered set of stimulus programs with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusBattery {
    pub name: String,
    pub programs: Vec<StimulusProgram>,
}

impl StimulusBattery {
    pub fn new(name: impl Into<String>, programs: Vec<StimulusProgram>) -> Result<Self, ExperimentError> {
        let battery = StimulusBattery {
            name: name.into(),
            programs,
        };
        battery.validate()?;
        Ok(battery)
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.programs.iter().map(|p| p.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&StimulusProgram> {
        self.programs.iter().find(|p| p.id == id)
    }

    /// Content hash; records made with the same battery share it.
    pub fn id(&self) -> String {
        content_id(self)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.programs.is_empty() {
            return Err(ExperimentError::validation("battery.programs", "battery is empty"));
        }
        let mut seen = HashSet::new();
        for (i, program) in self.programs.iter().enumerate() {
            if !seen.insert(program.id.as_str()) {
                return Err(ExperimentError::validation(
                    format!("battery.programs.{i}.id"),
                    format!("duplicate stimulus id `{}`", program.id),
                ));
            }
            program.validate().map_err(|e| {
                ExperimentError::validation(
                    format!("battery.programs.{i}.{}", e.field().unwrap_or("program")),
                    e.to_string(),
                )
            })?;
        }
        Ok(())
    }
}

/// Carrier frequency of the preset battery, Hz.
pub const PRESET_FREQUENCY: f64 = 200.0;
/// Duration of one presentation, seconds.
pub const PRESET_DURATION: f64 = 0.5;
pub const PRESET_REPEATS: u32 = 5;
/// Silence between repetitions, seconds.
pub const PRESET_GAP: f64 = 0.1;

/// The five-stimulus comparison battery: sine, damped sine, square, damped
/// square and damped sawtooth, each 200 Hz, 0.5 s at 44.1 kHz, repeated 5
/// times with 0.1 s silences. Damped variants use `Decay { k: 5 }`.
///
/// Annotations carry the peak accelerations measured on the original
/// amplifier and actuator; they are informational text only.
pub fn paper_battery() -> StimulusBattery {
    let decay = Envelope::Decay { k: DEFAULT_EXPONENT };
    let entries = [
        ("sine", WaveShape::Sine, Envelope::None, "measured peak acceleration 5.6 m/s^2"),
        ("damped-sine", WaveShape::Sine, decay, "measured peak acceleration 5.6 m/s^2"),
        ("square", WaveShape::Square, Envelope::None, "measured peak acceleration 19.9 m/s^2"),
        ("damped-square", WaveShape::Square, decay, "measured peak acceleration 19.9 m/s^2"),
        ("damped-sawtooth", WaveShape::Sawtooth, decay, "measured peak acceleration 15.1 m/s^2"),
    ];
    let programs = entries
        .into_iter()
        .map(|(id, shape, envelope, note)| {
            let waveform = WaveformSpec::new(shape)
                .with_frequency(PRESET_FREQUENCY)
                .with_duration(PRESET_DURATION)
                .with_amplitude(1.0)
                .with_envelope(envelope);
            StimulusProgram::new(id, waveform)
                .with_repeats(PRESET_REPEATS)
                .with_gap(PRESET_GAP)
                .with_annotation(note)
        })
        .collect();
    StimulusBattery {
        name: "paper".into(),
        programs,
    }
}

/// Looks up a named preset battery.
pub fn preset(name: &str) -> Option<StimulusBattery> {
    match name {
        "paper" => Some(paper_battery()),
        _ => None,
    }
}
