use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use tokio::sync::broadcast::error::RecvError;
use vibrobench_core::experiment::{aggregate_ranks, create_session, preset, Cue, StimulusBattery};
use vibrobench_core::playback::{HandleState, PlaybackHandle, PlaybackMode};
use vibrobench_core::schema::{from_json, SpecDocument, WIRE_VERSION};
use vibrobench_core::synth::{
    assemble_program, decimate_min_max, render_wave, waveform_metrics, SampleBuffer, SynthError,
    MAX_PREVIEW_BUCKETS,
};
use vibrobench_core::wav::encode_wav;
use vibrobench_core::{ExperimentError, ExperimentSession};

use crate::error::ApiError;
use crate::state::{AppState, SessionSlot};
use crate::wire::*;

type AppResult<T> = Result<T, ApiError>;
type Shared = State<Arc<AppState>>;

const PRESET_NAMES: [&str; 1] = ["paper"];
const WATCH_INTERVAL: Duration = Duration::from_millis(20);

pub async fn health() -> Json<Health> {
    Json(Health {
        v: WIRE_VERSION,
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

pub async fn devices(State(st): Shared) -> AppResult<Json<DevicesResponse>> {
    Ok(Json(DevicesResponse {
        v: WIRE_VERSION,
        devices: st.player.devices()?,
    }))
}

fn render_document(doc: &SpecDocument) -> Result<SampleBuffer, SynthError> {
    match doc {
        SpecDocument::Waveform(w) => render_wave(w),
        SpecDocument::Program(p) => assemble_program(p),
        _ => unreachable!("only specs are rendered"),
    }
}

/// Renders through the cache; identical specs share one buffer.
async fn cached_render(st: &AppState, doc: SpecDocument, prefix: &str) -> AppResult<(String, SampleBuffer)> {
    let id = doc.id();
    if let Some(buffer) = st.renders.get(&id) {
        return Ok((id, buffer.clone()));
    }
    let buffer = tokio::task::spawn_blocking(move || render_document(&doc))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::synth(prefix, e))?;
    st.cache_render(id.clone(), buffer.clone());
    Ok((id, buffer))
}

pub async fn render(State(st): Shared, body: Bytes) -> AppResult<Json<RenderResponse>> {
    let req: RenderRequest = parse_body(&body)?;
    let buckets = req.preview_buckets.unwrap_or(DEFAULT_PREVIEW_BUCKETS);
    if !(1..=MAX_PREVIEW_BUCKETS).contains(&buckets) {
        return Err(ApiError::validation(
            "preview_buckets",
            format!("must lie in 1..={MAX_PREVIEW_BUCKETS}, got {buckets}"),
        ));
    }
    let (doc, prefix) = match (req.waveform, req.program) {
        (Some(w), None) => (SpecDocument::Waveform(w), "waveform"),
        (None, Some(p)) => (SpecDocument::Program(p), "program"),
        _ => {
            return Err(ApiError::validation(
                ".",
                "exactly one of `waveform` or `program` is required",
            ))
        }
    };
    let (buffer_id, buffer) = cached_render(&st, doc.clone(), prefix).await?;
    let (metrics, preview, buffer) = tokio::task::spawn_blocking(move || {
        let metrics = waveform_metrics(&buffer).expect("rendered buffers are non-empty");
        (metrics, decimate_min_max(&buffer, buckets), buffer)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?;
    let (waveform, program) = match doc {
        SpecDocument::Waveform(w) => (Some(w), None),
        SpecDocument::Program(p) => (None, Some(p)),
        _ => unreachable!(),
    };
    Ok(Json(RenderResponse {
        v: WIRE_VERSION,
        buffer_id,
        waveform,
        program,
        sample_rate: buffer.sample_rate(),
        samples: buffer.len(),
        duration: buffer.duration_secs(),
        metrics,
        preview,
    }))
}

fn cached_buffer(st: &AppState, buffer_id: &str) -> AppResult<SampleBuffer> {
    st.renders.get(buffer_id).map(|b| b.clone()).ok_or_else(|| {
        ApiError::not_found(
            "buffer_id",
            format!("no rendered buffer `{buffer_id}`; POST /render first"),
        )
    })
}

pub async fn render_wav(State(st): Shared, Path(file): Path<String>) -> AppResult<Response> {
    let Some(buffer_id) = file.strip_suffix(".wav") else {
        return Err(ApiError::not_found("buffer_id", "downloads end in `.wav`"));
    };
    let buffer = cached_buffer(&st, buffer_id)?;
    let bytes = encode_wav(&buffer).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "audio/wav".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{buffer_id}.wav\""),
            ),
        ],
        bytes,
    )
        .into_response())
}

fn handle_status(handle: &PlaybackHandle) -> HandleStatus {
    HandleStatus {
        v: WIRE_VERSION,
        handle_id: handle.id(),
        device_index: handle.device(),
        state: wire_state(handle.state()),
        emitted_samples: handle.emitted_samples(),
        completed_iterations: handle.completed_iterations(),
        error: handle.error().map(|e| e.to_string()),
    }
}

fn wire_state(state: HandleState) -> HandleStateWire {
    match state {
        HandleState::Playing => HandleStateWire::Playing,
        HandleState::Stopped => HandleStateWire::Stopped,
    }
}

pub async fn play(State(st): Shared, body: Bytes) -> AppResult<Json<HandleStatus>> {
    let req: PlayRequest = parse_body(&body)?;
    let buffer = cached_buffer(&st, &req.buffer_id)?;
    let handle = st.player.play(&buffer, req.mode, req.device_index)?;
    st.track_handle(handle.clone());
    Ok(Json(handle_status(&handle)))
}

fn lookup_handle(st: &AppState, id: u64) -> AppResult<PlaybackHandle> {
    st.handles
        .get(&id)
        .map(|h| h.clone())
        .ok_or_else(|| ApiError::not_found("handle_id", format!("no playback handle {id}")))
}

pub async fn stop(State(st): Shared, body: Bytes) -> AppResult<Json<HandleStatus>> {
    let req: StopRequest = parse_body(&body)?;
    let handle = lookup_handle(&st, req.handle_id)?;
    st.player.stop(&handle);
    Ok(Json(handle_status(&handle)))
}

pub async fn handle(State(st): Shared, Path(id): Path<u64>) -> AppResult<Json<HandleStatus>> {
    Ok(Json(handle_status(&lookup_handle(&st, id)?)))
}

pub async fn presets() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "v": WIRE_VERSION, "presets": PRESET_NAMES }))
}

pub async fn preset_battery(Path(name): Path<String>) -> AppResult<Json<PresetResponse>> {
    let battery = preset(&name)
        .ok_or_else(|| ApiError::not_found("name", format!("no preset `{name}`")))?;
    Ok(Json(PresetResponse {
        v: WIRE_VERSION,
        name,
        battery_id: battery.id(),
        battery,
    }))
}

fn parse_battery(value: serde_json::Value) -> AppResult<StimulusBattery> {
    match value {
        serde_json::Value::String(name) => preset(&name).ok_or_else(|| {
            ApiError::validation(
                "battery",
                format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", ")),
            )
        }),
        other => {
            let battery: StimulusBattery = from_json(&other.to_string()).map_err(|e| {
                let path = if e.path == "." { "battery".into() } else { format!("battery.{}", e.path) };
                ApiError::validation(path, e.message)
            })?;
            battery.validate()?;
            Ok(battery)
        }
    }
}

fn random_seed() -> u64 {
    // RandomState is seeded from OS entropy per instance.
    std::collections::hash_map::RandomState::new()
        .build_hasher()
        .finish()
}

async fn persist(st: &AppState, session: &ExperimentSession) -> AppResult<()> {
    let store = st.store.clone();
    let snapshot = session.clone();
    tokio::task::spawn_blocking(move || {
        store.save_session(&snapshot)?;
        if let Some(record) = snapshot.record() {
            store.save_record(&record)?;
        }
        Ok::<_, ApiError>(())
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

fn respond(session: ExperimentSession) -> Json<SessionResponse> {
    Json(SessionResponse {
        v: WIRE_VERSION,
        session,
        cue: None,
        handle_id: None,
        record: None,
    })
}

pub async fn create(State(st): Shared, body: Bytes) -> AppResult<(StatusCode, Json<SessionResponse>)> {
    let req: CreateSessionRequest = parse_body(&body)?;
    let battery = parse_battery(req.battery)?;
    let seed = req.seed.unwrap_or_else(random_seed);
    let session = create_session(battery, req.participant, seed).map_err(|e| match e {
        ExperimentError::Validation { path, message } if path.starts_with("battery") => {
            ApiError::validation(path, message)
        }
        other => other.into(),
    })?;
    persist(&st, &session).await?;
    st.insert_session(session.clone());
    Ok((StatusCode::CREATED, respond(session)))
}

pub async fn list(State(st): Shared) -> Json<SessionList> {
    let slots: Vec<Arc<SessionSlot>> = st.sessions.iter().map(|e| Arc::clone(e.value())).collect();
    let mut sessions = Vec::with_capacity(slots.len());
    for slot in slots {
        let s = slot.session.lock().await;
        sessions.push(SessionSummary {
            session_id: s.session_id().into(),
            participant: s.participant().into(),
            battery_id: s.battery_id().into(),
            phase: s.phase(),
        });
    }
    sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Json(SessionList {
        v: WIRE_VERSION,
        sessions,
    })
}

pub async fn get_session(State(st): Shared, Path(id): Path<String>) -> AppResult<Json<SessionResponse>> {
    let slot = st.slot(&id)?;
    let session = slot.session.lock().await.clone();
    Ok(respond(session))
}

/// Applies `op` to a copy of the session, persists the copy, then swaps it
/// in. Failed operations and failed writes leave the session untouched.
async fn mutate<R>(
    st: &AppState,
    slot: &SessionSlot,
    op: impl FnOnce(&mut ExperimentSession) -> Result<R, ExperimentError>,
) -> AppResult<(ExperimentSession, R)> {
    let mut guard = slot.session.lock().await;
    let mut next = guard.clone();
    let out = op(&mut next)?;
    persist(st, &next).await?;
    *guard = next.clone();
    Ok((next, out))
}

fn publish_phase(slot: &SessionSlot, session: &ExperimentSession, cue: Option<Cue>) {
    slot.publish(SessionEventMessage::Phase {
        v: WIRE_VERSION,
        session_id: session.session_id().into(),
        phase: session.phase(),
        cue,
    });
}

fn check_device(st: &AppState, index: usize) -> AppResult<()> {
    let devices = st.player.devices()?;
    if devices.iter().any(|d| d.index == index) {
        Ok(())
    } else {
        Err(ApiError::not_found(
            "device_index",
            format!("no output device with index {index}"),
        ))
    }
}

/// Plays the cued program once and reports its state on the session
/// channel until it stops.
async fn play_cue(
    st: &Arc<AppState>,
    slot: &Arc<SessionSlot>,
    session: &ExperimentSession,
    cue: &Cue,
    device_index: usize,
) -> AppResult<u64> {
    let program = session.battery().programs[cue.stimulus].clone();
    let (_, buffer) = cached_render(st, SpecDocument::Program(program), "program").await?;
    let handle = st.player.play(&buffer, PlaybackMode::Once, device_index)?;
    st.track_handle(handle.clone());
    let message = |state| SessionEventMessage::Playback {
        v: WIRE_VERSION,
        session_id: session.session_id().into(),
        handle_id: handle.id(),
        device_index,
        stimulus: cue.id.clone(),
        state,
    };
    slot.publish(message(HandleStateWire::Playing));
    let stopped = message(HandleStateWire::Stopped);
    let (watch, watch_slot) = (handle.clone(), Arc::clone(slot));
    tokio::spawn(async move {
        while watch.state() == HandleState::Playing {
            tokio::time::sleep(WATCH_INTERVAL).await;
        }
        watch_slot.publish(stopped);
    });
    Ok(handle.id())
}

async fn cue_step(
    st: Arc<AppState>,
    id: String,
    body: Bytes,
    op: fn(&mut ExperimentSession) -> Result<Cue, ExperimentError>,
) -> AppResult<Json<SessionResponse>> {
    let req: CueRequest = parse_body(&body)?;
    if let Some(device) = req.device_index {
        check_device(&st, device)?;
    }
    let slot = st.slot(&id)?;
    let (session, cue) = mutate(&st, &slot, op).await?;
    publish_phase(&slot, &session, Some(cue.clone()));
    let handle_id = match req.device_index {
        Some(device) => match play_cue(&st, &slot, &session, &cue, device).await {
            Ok(id) => Some(id),
            Err(err) => {
                // The step itself is committed; report playback trouble in
                // the log rather than failing the transition.
                tracing::warn!(session = %id, "cue playback failed: {}", err.body.message);
                None
            }
        },
        None => None,
    };
    Ok(Json(SessionResponse {
        v: WIRE_VERSION,
        session,
        cue: Some(cue),
        handle_id,
        record: None,
    }))
}

pub async fn advance(State(st): Shared, Path(id): Path<String>, body: Bytes) -> AppResult<Json<SessionResponse>> {
    cue_step(st, id, body, ExperimentSession::advance_presentation).await
}

pub async fn confirm_advance(
    State(st): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> AppResult<Json<SessionResponse>> {
    cue_step(st, id, body, ExperimentSession::advance_confirmation).await
}

async fn ranking_step(
    st: Arc<AppState>,
    id: String,
    body: Bytes,
    op: fn(&mut ExperimentSession, Vec<usize>) -> Result<(), ExperimentError>,
) -> AppResult<Json<SessionResponse>> {
    let req: RankingRequest = parse_body(&body)?;
    let slot = st.slot(&id)?;
    let (session, ()) = mutate(&st, &slot, |s| op(s, req.ranking)).await?;
    publish_phase(&slot, &session, None);
    Ok(respond(session))
}

pub async fn rank(State(st): Shared, Path(id): Path<String>, body: Bytes) -> AppResult<Json<SessionResponse>> {
    ranking_step(st, id, body, ExperimentSession::submit_ranking).await
}

pub async fn amend(State(st): Shared, Path(id): Path<String>, body: Bytes) -> AppResult<Json<SessionResponse>> {
    ranking_step(st, id, body, ExperimentSession::amend_ranking).await
}

pub async fn finalize(State(st): Shared, Path(id): Path<String>, body: Bytes) -> AppResult<Json<SessionResponse>> {
    let _: CueRequest = parse_body(&body)?;
    let slot = st.slot(&id)?;
    let (session, record) = mutate(&st, &slot, ExperimentSession::finalize).await?;
    publish_phase(&slot, &session, None);
    Ok(Json(SessionResponse {
        v: WIRE_VERSION,
        session,
        cue: None,
        handle_id: None,
        record: Some(record),
    }))
}

pub async fn events(
    State(st): Shared,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> AppResult<Response> {
    let slot = st.slot(&id)?;
    Ok(ws.on_upgrade(move |socket| stream_events(socket, slot)))
}

async fn snapshot(slot: &SessionSlot) -> SessionEventMessage {
    SessionEventMessage::Snapshot {
        v: WIRE_VERSION,
        session: Box::new(slot.session.lock().await.clone()),
    }
}

async fn send(socket: &mut WebSocket, message: &SessionEventMessage) -> bool {
    let text = serde_json::to_string(message).expect("event messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn stream_events(mut socket: WebSocket, slot: Arc<SessionSlot>) {
    // Subscribe before the snapshot so no change falls between the two.
    let mut rx = slot.events.subscribe();
    if !send(&mut socket, &snapshot(&slot).await).await {
        return;
    }
    loop {
        tokio::select! {
            event = rx.recv() => {
                let message = match event {
                    Ok(message) => message,
                    Err(RecvError::Lagged(_)) => snapshot(&slot).await,
                    Err(RecvError::Closed) => break,
                };
                if !send(&mut socket, &message).await {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

pub async fn aggregate(
    State(st): Shared,
    Query(params): Query<HashMap<String, String>>,
) -> AppResult<Response> {
    if let Some(key) = params.keys().find(|k| !matches!(k.as_str(), "battery" | "format")) {
        return Err(ApiError::validation(key.clone(), "unknown query parameter"));
    }
    let selector = params.get("battery").map_or("paper", String::as_str).to_string();
    let format = params.get("format").map_or("json", String::as_str);
    if !matches!(format, "json" | "tsv" | "table") {
        return Err(ApiError::validation("format", "must be json, tsv or table"));
    }

    let store = st.store.clone();
    let records = tokio::task::spawn_blocking(move || store.records())
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let battery = match preset(&selector) {
        Some(b) => b,
        None => records
            .iter()
            .find(|r| r.battery_id == selector)
            .map(|r| r.battery.clone())
            .ok_or_else(|| ExperimentError::Domain("no records".into()))?,
    };
    let battery_id = battery.id();
    let matching: Vec<_> = records.into_iter().filter(|r| r.battery_id == battery_id).collect();
    let aggregate = aggregate_ranks(&matching, &battery)?;

    Ok(match format {
        "tsv" => ([(header::CONTENT_TYPE, "text/tab-separated-values")], aggregate.to_tsv()).into_response(),
        "table" => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], aggregate.to_table()).into_response(),
        _ => Json(AggregateResponse {
            v: WIRE_VERSION,
            table: aggregate.to_tsv(),
            aggregate,
        })
        .into_response(),
    })
}

pub async fn fallback() -> ApiError {
    ApiError::not_found(".", "no such endpoint")
}
