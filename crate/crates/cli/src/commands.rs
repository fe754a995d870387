use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use vibrobench_core::experiment::store::{read_record, RECORD_EXTENSION};
use vibrobench_core::experiment::{preset, RankAggregate};
use vibrobench_core::playback::{NullBackend, NullClock};
use vibrobench_core::synth::{
    assemble_program, render_band_limited, render_wave, SampleBuffer, StimulusProgram, WaveformSpec,
};
use vibrobench_core::wav::export_file_name;
use vibrobench_core::{
    aggregate_ranks, decode_wav, encode_wav, ExperimentError, PlaybackMode, Player, SessionRecord,
    StimulusBattery,
};
use vibrobench_service::ServiceConfig;

use crate::args::{
    AggregateArgs, BackendArgs, ExportArgs, FormatArg, ModeArg, PlayArgs, RenderArgs, ServeArgs,
};
use crate::error::{CliError, CliResult};

/// The selected audio backend plus the clock that drives it, if any.
pub struct Output {
    pub backend: NullBackend,
    _clock: Option<NullClock>,
}

impl Output {
    pub fn open(args: &BackendArgs) -> CliResult<Self> {
        if args.backend != "null" {
            return Err(CliError::new(
                "device",
                "backend",
                format!("unknown backend {:?}; available: null", args.backend),
            ));
        }
        if !(args.clock_speed.is_finite() && args.clock_speed > 0.0) {
            return Err(CliError::new("validation", "clock_speed", "must be a positive number"));
        }
        let backend = NullBackend::new().without_capture();
        let clock = backend.start_clock(args.clock_speed);
        Ok(Output {
            backend,
            _clock: Some(clock),
        })
    }

    pub fn player(&self) -> Player {
        Player::new(Arc::new(self.backend.clone()))
    }
}

pub fn render(args: RenderArgs) -> CliResult {
    let waveform = WaveformSpec::new(args.shape.into())
        .with_frequency(args.freq)
        .with_amplitude(args.amp)
        .with_duration(args.dur)
        .with_envelope(args.envelope())
        .with_sample_rate(args.sample_rate);
    let buffer = match args.repeats {
        Some(repeats) => {
            if args.band_limited {
                return Err(CliError::new(
                    "validation",
                    "band_limited",
                    "band-limited rendering applies to single waveforms only",
                ));
            }
            let program = StimulusProgram::new("render", waveform)
                .with_repeats(repeats)
                .with_gap(args.gap);
            assemble_program(&program)?
        }
        None if args.band_limited => render_band_limited(&waveform)?,
        None => render_wave(&waveform)?,
    };
    write_wav(&args.out, &buffer)?;
    println!(
        "{}\t{} samples\t{:.6} s",
        args.out.display(),
        buffer.len(),
        buffer.duration_secs()
    );
    Ok(())
}

pub fn export_battery(args: ExportArgs) -> CliResult {
    let battery = preset_battery(&args.preset)?;
    fs::create_dir_all(&args.dir).map_err(|e| CliError::io(&args.dir, e))?;
    for program in &battery.programs {
        let buffer = assemble_program(program)?;
        let path = args.dir.join(export_file_name(program));
        write_wav(&path, &buffer)?;
        println!("{}\t{}\t{} samples", program.id, path.display(), buffer.len());
    }
    Ok(())
}

pub fn devices(args: BackendArgs) -> CliResult {
    let output = Output::open(&args)?;
    for device in output.player().devices()? {
        let max = device
            .max_sample_rate
            .map_or_else(|| "any".to_string(), |hz| format!("{hz} Hz"));
        println!("{}\t{}\tmax rate: {max}", device.index, device.name);
    }
    Ok(())
}

pub fn play(args: PlayArgs) -> CliResult {
    let bytes = fs::read(&args.file).map_err(|e| CliError::io(&args.file, e))?;
    let buffer = decode_wav(&bytes)?;
    let mode = match args.mode {
        ModeArg::Once => PlaybackMode::Once,
        ModeArg::Continuous => PlaybackMode::Continuous,
        ModeArg::Gapped => PlaybackMode::gapped(args.gap),
    };
    if let Some(secs) = args.for_secs {
        if !(secs.is_finite() && secs > 0.0) {
            return Err(CliError::new("validation", "for", "must be a positive number of seconds"));
        }
    }
    let output = Output::open(&args.backend)?;
    let player = output.player();
    let handle = player.play(&buffer, mode, args.device)?;
    eprintln!(
        "playing {} on device {} ({:.3} s, handle {})",
        args.file.display(),
        args.device,
        buffer.duration_secs(),
        handle.id()
    );

    match (mode, args.for_secs) {
        (_, Some(secs)) => {
            handle.wait(Duration::from_secs_f64(secs));
        }
        (PlaybackMode::Once, None) => {
            let budget = buffer.duration_secs() / args.backend.clock_speed + 5.0;
            handle.wait(Duration::from_secs_f64(budget));
        }
        (_, None) => {
            eprintln!("press Enter to stop");
            let mut line = String::new();
            let _ = std::io::stdin().lock().read_line(&mut line);
        }
    }
    player.stop(&handle);
    if let Some(err) = handle.error() {
        return Err(err.into());
    }
    println!(
        "stopped\t{} samples\t{} iterations",
        handle.emitted_samples(),
        handle.completed_iterations()
    );
    Ok(())
}

pub fn aggregate(args: AggregateArgs) -> CliResult {
    let mut records = Vec::new();
    for path in expand_record_paths(&args.files)? {
        if let Some(record) = read_record(&path)? {
            records.push(record);
        }
    }
    let aggregate = aggregate_records(records, args.battery.as_deref())?;
    let out = match args.format {
        FormatArg::Table => aggregate.to_table(),
        FormatArg::Tsv => aggregate.to_tsv(),
        FormatArg::Json => {
            let mut text = serde_json::to_string_pretty(&aggregate).expect("aggregate serializes");
            text.push('\n');
            text
        }
    };
    print!("{out}");
    Ok(())
}

/// Picks the battery (a preset name, a battery id, or the single battery all
/// records share) and aggregates the matching records.
pub fn aggregate_records(
    records: Vec<SessionRecord>,
    selector: Option<&str>,
) -> CliResult<RankAggregate> {
    let no_records = || CliError::from(ExperimentError::Domain("no records".into()));
    let battery = match selector {
        Some(name) => match preset(name) {
            Some(b) => b,
            None => records
                .iter()
                .find(|r| r.battery_id == name)
                .map(|r| r.battery.clone())
                .ok_or_else(no_records)?,
        },
        None => {
            let first = records.first().ok_or_else(no_records)?;
            if let Some(other) = records.iter().find(|r| r.battery_id != first.battery_id) {
                return Err(CliError::new(
                    "validation",
                    "battery",
                    format!(
                        "records use batteries {} and {}; choose one with --battery",
                        first.battery_id, other.battery_id
                    ),
                ));
            }
            first.battery.clone()
        }
    };
    let id = battery.id();
    let matching: Vec<_> = records.into_iter().filter(|r| r.battery_id == id).collect();
    Ok(aggregate_ranks(&matching, &battery)?)
}

/// Files as given; directories contribute their `.rec` files in name order.
fn expand_record_paths(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == RECORD_EXTENSION))
                .collect();
            found.sort();
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    Ok(paths)
}

pub fn serve(args: ServeArgs) -> CliResult {
    init_tracing();
    let output = Output::open(&args.backend)?;
    let config = ServiceConfig {
        host: args.host,
        port: args.port,
        state_dir: args.state_dir.clone(),
        backend: Arc::new(output.backend.clone()),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new("io", ".", e.to_string()))?;
    runtime
        .block_on(async {
            let server = vibrobench_service::Server::bind(&config).await?;
            if let Ok(addr) = server.local_addr() {
                eprintln!("listening on http://{addr}");
            }
            server
                .run(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        })
        .map_err(|e| CliError::new("service", ".", e.to_string()))
}

fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn preset_battery(name: &str) -> CliResult<StimulusBattery> {
    preset(name).ok_or_else(|| {
        CliError::new("validation", "preset", format!("unknown preset battery {name:?}"))
    })
}

fn write_wav(path: &Path, buffer: &SampleBuffer) -> CliResult {
    let bytes = encode_wav(buffer)?;
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| CliError::io(path, e))?;
    Ok(())
}
