use std::sync::Arc;

use dashmap::DashMap;
use tokio::sync::{broadcast, Mutex};
use vibrobench_core::experiment::{SessionStore, StoreError};
use vibrobench_core::playback::{AudioBackend, PlaybackHandle, Player};
use vibrobench_core::synth::SampleBuffer;
use vibrobench_core::ExperimentSession;

use crate::error::ApiError;
use crate::wire::SessionEventMessage;

/// Rendered buffers kept for `/render/{id}.wav` and `/play`.
pub const RENDER_CACHE_CAPACITY: usize = 64;
const EVENT_CHANNEL_CAPACITY: usize = 64;
const HANDLE_TABLE_SOFT_LIMIT: usize = 1024;

/// One live session. The mutex makes every mutation single-writer.
pub struct SessionSlot {
    pub session: Mutex<ExperimentSession>,
    pub events: broadcast::Sender<SessionEventMessage>,
}

impl SessionSlot {
    fn new(session: ExperimentSession) -> Arc<Self> {
        let (events, _) = broadcast::channel(EVENT_CHANNEL_CAPACITY);
        Arc::new(SessionSlot {
            session: Mutex::new(session),
            events,
        })
    }

    pub fn publish(&self, message: SessionEventMessage) {
        // No subscribers is fine.
        let _ = self.events.send(message);
    }
}

pub struct AppState {
    pub player: Player,
    pub store: SessionStore,
    pub sessions: DashMap<String, Arc<SessionSlot>>,
    pub renders: DashMap<String, SampleBuffer>,
    pub handles: DashMap<u64, PlaybackHandle>,
}

impl AppState {
    /// Opens the store and restores every journaled session. Sessions whose
    /// final record was lost between the two appends get it rewritten.
    pub fn new(store: SessionStore, backend: Arc<dyn AudioBackend>) -> Result<Self, StoreError> {
        let sessions = DashMap::new();
        for journal in store.load_all()? {
            let Some(session) = journal.session else {
                continue;
            };
            if journal.record.is_none() {
                if let Some(record) = session.record() {
                    store.save_record(&record)?;
                }
            }
            sessions.insert(session.session_id().to_string(), SessionSlot::new(session));
        }
        Ok(AppState {
            player: Player::new(backend),
            store,
            sessions,
            renders: DashMap::new(),
            handles: DashMap::new(),
        })
    }

    pub fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions
            .get(id)
            .map(|s| Arc::clone(&s))
            .ok_or_else(|| ApiError::not_found("session_id", format!("no session `{id}`")))
    }

    pub fn insert_session(&self, session: ExperimentSession) -> Arc<SessionSlot> {
        let slot = SessionSlot::new(session.clone());
        self.sessions
            .insert(session.session_id().to_string(), Arc::clone(&slot));
        slot
    }

    pub fn cache_render(&self, id: String, buffer: SampleBuffer) {
        if !self.renders.contains_key(&id) && self.renders.len() >= RENDER_CACHE_CAPACITY {
            // Any victim will do: a miss only costs a re-render.
            let victim = self.renders.iter().next().map(|e| e.key().clone());
            if let Some(victim) = victim {
                self.renders.remove(&victim);
            }
        }
        self.renders.insert(id, buffer);
    }

    pub fn track_handle(&self, handle: PlaybackHandle) {
        if self.handles.len() >= HANDLE_TABLE_SOFT_LIMIT {
            self.handles
                .retain(|_, h| h.state() == vibrobench_core::playback::HandleState::Playing);
        }
        self.handles.insert(handle.id(), handle);
    }

    /// Stops all playback; used on shutdown.
    pub fn stop_all(&self) {
        for entry in self.handles.iter() {
            self.player.stop(entry.value());
        }
    }
}
