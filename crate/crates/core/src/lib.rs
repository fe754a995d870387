//! Vibrotactile stimulus workbench: waveform synthesis, WAV export,
//! playback routing and the rank-by-intensity experiment protocol.

pub mod experiment;
pub mod playback;
pub mod schema;
pub mod synth;
pub mod wav;

pub use synth::{
    amplitude_from_percent, assemble_program, envelope_gain, oscillator_sample, render_wave,
    waveform_metrics, Envelope, SampleBuffer, StimulusProgram, SynthError, WaveShape,
    WaveformMetrics, WaveformSpec,
};
pub use wav::{decode_wav, encode_wav, WavError};
pub use experiment::{
    aggregate_ranks, create_session, paper_battery, ExperimentError, ExperimentSession, Phase,
    RankAggregate, SessionRecord, SessionStore, StimulusBattery,
};
pub use playback::{NullBackend, Player, PlaybackHandle, PlaybackMode};
pub use schema::{content_id, SchemaError, SpecDocument, WIRE_VERSION};
