//! Local control service: synthesis, playback and experiment sessions over
//! HTTP, with per-session WebSocket updates.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/health` | status and version |
//! | GET | `/devices` | output devices |
//! | POST | `/render` | `{v, waveform \| program, preview_buckets?}` → metrics, preview, `buffer_id` |
//! | GET | `/render/{buffer_id}.wav` | WAV bytes |
//! | POST | `/play` | `{v, buffer_id, mode?, device_index?}` → handle status |
//! | POST | `/stop` | `{v, handle_id}` |
//! | GET | `/handles/{id}` | handle status |
//! | GET | `/presets`, `/presets/{name}` | preset batteries |
//! | POST/GET | `/sessions` | create `{v, battery, participant, seed?}` / list |
//! | GET | `/sessions/{id}` | session snapshot |
//! | POST | `/sessions/{id}/advance`, `/confirm-advance` | `{v?, device_index?}` → cue |
//! | POST | `/sessions/{id}/rank`, `/amend` | `{v, ranking}` |
//! | POST | `/sessions/{id}/finalize` | → record |
//! | GET | `/sessions/{id}/events` | WebSocket: snapshot, phase and playback events |
//! | GET | `/aggregate?battery=&format=` | rank boxplot statistics |
//!
//! Errors are `{code, path, message}`; illegal transitions answer 409.

pub mod error;
mod routes;
pub mod state;
pub mod wire;

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use thiserror::Error;
use vibrobench_core::experiment::{SessionStore, StoreError};
use vibrobench_core::playback::AudioBackend;

pub use error::{ApiError, ErrorBody};
pub use state::AppState;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(routes::health))
        .route("/devices", get(routes::devices))
        .route("/render", post(routes::render))
        .route("/render/{file}", get(routes::render_wav))
        .route("/play", post(routes::play))
        .route("/stop", post(routes::stop))
        .route("/handles/{id}", get(routes::handle))
        .route("/presets", get(routes::presets))
        .route("/presets/{name}", get(routes::preset_battery))
        .route("/sessions", post(routes::create).get(routes::list))
        .route("/sessions/{id}", get(routes::get_session))
        .route("/sessions/{id}/advance", post(routes::advance))
        .route("/sessions/{id}/rank", post(routes::rank))
        .route("/sessions/{id}/confirm-advance", post(routes::confirm_advance))
        .route("/sessions/{id}/amend", post(routes::amend))
        .route("/sessions/{id}/finalize", post(routes::finalize))
        .route("/sessions/{id}/events", get(routes::events))
        .route("/aggregate", get(routes::aggregate))
        .fallback(routes::fallback)
        .with_state(state)
}

pub struct ServiceConfig {
    pub host: IpAddr,
    pub port: u16,
    pub state_dir: PathBuf,
    pub backend: Arc<dyn AudioBackend>,
}

impl ServiceConfig {
    /// Loopback-only on `port`.
    pub fn local(port: u16, state_dir: impl Into<PathBuf>, backend: Arc<dyn AudioBackend>) -> Self {
        ServiceConfig {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port,
            state_dir: state_dir.into(),
            backend,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("state directory {path} is not usable: {source}; pass --state-dir with a writable directory")]
    StateDir {
        path: PathBuf,
        #[source]
        source: StoreError,
    },
    #[error("cannot listen on {addr}: {source}; is the port already in use? pick another with --port")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Opens the store (restoring saved sessions) and builds the shared state.
pub fn open_state(config: &ServiceConfig) -> Result<Arc<AppState>, ServeError> {
    let state_err = |source| ServeError::StateDir {
        path: config.state_dir.clone(),
        source,
    };
    let store = SessionStore::open(&config.state_dir).map_err(state_err)?;
    let state = AppState::new(store, Arc::clone(&config.backend)).map_err(state_err)?;
    Ok(Arc::new(state))
}

/// A bound, not yet running service.
pub struct Server {
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
}

impl Server {
    pub async fn bind(config: &ServiceConfig) -> Result<Self, ServeError> {
        let state = open_state(config)?;
        let addr = SocketAddr::new(config.host, config.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|source| ServeError::Bind { addr, source })?;
        Ok(Server { listener, state })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    /// Serves until `shutdown` resolves, then stops all playback. Journal
    /// lines are synced as they are written, so nothing is pending.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        let state = Arc::clone(&self.state);
        tracing::info!(addr = %self.listener.local_addr()?, "serving");
        axum::serve(self.listener, router(Arc::clone(&state)))
            .with_graceful_shutdown(shutdown)
            .await?;
        state.stop_all();
        tracing::info!("stopped");
        Ok(())
    }
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    Server::bind(&config).await?.run(shutdown).await
}
