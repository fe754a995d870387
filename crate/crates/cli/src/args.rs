use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vibrobench_core::synth::{
    Envelope, WaveShape, DEFAULT_AMPLITUDE, DEFAULT_DURATION, DEFAULT_EXPONENT, DEFAULT_FREQUENCY,
    DEFAULT_GAP, DEFAULT_SAMPLE_RATE,
};

#[derive(Debug, Parser)]
#[command(name = "vibrobench", version, about = "Vibrotactile stimulus workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one waveform (or a repeated program) to a WAV file.
    Render(RenderArgs),
    /// Preset batteries.
    Battery {
        #[command(subcommand)]
        command: BatteryCommand,
    },
    /// List output devices.
    Devices(BackendArgs),
    /// Play a WAV file on an output device.
    Play(PlayArgs),
    /// Run the ranking experiment.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Summarize finalized session records as rank boxplot statistics.
    Aggregate(AggregateArgs),
    /// Run the HTTP/WebSocket control service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum BatteryCommand {
    /// Write every program of a preset battery as a WAV file.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Interactive terminal session: present, rank, confirm, finalize.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Sine,
    Square,
    Triangle,
    Sawtooth,
}

impl From<ShapeArg> for WaveShape {
    fn from(shape: ShapeArg) -> Self {
        match shape {
            ShapeArg::Sine => WaveShape::Sine,
            ShapeArg::Square => WaveShape::Square,
            ShapeArg::Triangle => WaveShape::Triangle,
            ShapeArg::Sawtooth => WaveShape::Sawtooth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnvelopeArg {
    None,
    Decay,
    Rise,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RenderArgs {
    #[arg(long, value_enum, default_value = "sine")]
    pub shape: ShapeArg,
    /// Frequency in Hz.
    #[arg(long, default_value_t = DEFAULT_FREQUENCY)]
    pub freq: f64,
    /// Peak amplitude in [0, 1].
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE)]
    pub amp: f64,
    /// Duration in seconds.
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    pub dur: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub envelope: EnvelopeArg,
    /// Envelope exponent.
    #[arg(long, default_value_t = DEFAULT_EXPONENT)]
    pub k: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    pub sample_rate: u32,
    /// Repeat the waveform this many times (with --gap silences between).
    #[arg(long)]
    pub repeats: Option<u32>,
    /// Silence between repeats, seconds.
    #[arg(long, default_value_t = DEFAULT_GAP, requires = "repeats")]
    pub gap: f64,
    /// Sum harmonic partials below Nyquist instead of naive sampling.
    #[arg(long)]
    pub band_limited: bool,
    #[arg(long, default_value = "stimulus.wav")]
    pub out: PathBuf,
}

impl RenderArgs {
    pub fn envelope(&self) -> Envelope {
        match self.envelope {
            EnvelopeArg::None => Envelope::None,
            EnvelopeArg::Decay => Envelope::Decay { k: self.k },
            EnvelopeArg::Rise => Envelope::Rise { k: self.k },
        }
    }
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, default_value = "paper")]
    pub preset: String,
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Audio backend. Only the null device (captures and discards) is built in.
    #[arg(long, default_value = "null")]
    pub backend: String,
    /// Null-device clock speed relative to real time.
    #[arg(long, default_value_t = 1.0)]
    pub clock_speed: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Once,
    Continuous,
    Gapped,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "once")]
    pub mode: ModeArg,
    /// Silence between gapped repetitions, seconds.
    #[arg(long, default_value_t = DEFAULT_GAP)]
    pub gap: f64,
    #[arg(long, default_value_t = 0)]
    pub device: usize,
    /// Stop loops after this many seconds (default: wait for Enter).
    #[arg(long = "for")]
    pub for_secs: Option<f64>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "paper")]
    pub preset: String,
    #[arg(long)]
    pub participant: String,
    /// Presentation-order seed; drawn at random (and recorded) when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub device: usize,
    /// Directory for `<session_id>.rec` journals.
    #[arg(long, default_value = "records")]
    pub records: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Table,
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// `.rec` journals or directories of them; unfinished sessions are skipped.
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: FormatArg,
    /// Preset name or battery id. Required when the records mix batteries.
    #[arg(long)]
    pub battery: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8787)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value = "state")]
    pub state_dir: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
}
