// SPDX-License-Identifier: Apache-2.0

//! HTTP service for the claim game, plus startup and shutdown plumbing.

pub mod api;
pub mod auth;
pub mod clock;
pub mod config;

use std::future::Future;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use fm2_core::corpus::Corpus;
use fm2_core::eventlog::EventLog;
use fm2_core::game::{GameEngine, GameError};
use fm2_core::retrieval::SparseIndex;

pub use api::{router, AppState};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServerConfig;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("startup: {0}")]
    Startup(String),
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error(transparent)]
    Core(#[from] fm2_core::Error),
}

impl From<GameError> for ServiceError {
    fn from(e: GameError) -> Self {
        ServiceError::Core(e.into())
    }
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        use fm2_core::Error as E;
        use GameError as G;
        match self {
            ServiceError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::Config(_) | ServiceError::Startup(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Core(E::Game(g)) => match g {
                G::UnknownSession(_) | G::UnknownClaim(_) | G::UnknownRound(_) => StatusCode::NOT_FOUND,
                G::EmptyText | G::SpanCount(_) | G::SpanNotFound { .. } | G::ClaimNotInRound { .. } => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                G::InvalidEvent { .. } => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::CONFLICT,
            },
            ServiceError::Core(E::EmptyCategory(_) | E::NotFound { .. }) => StatusCode::NOT_FOUND,
            ServiceError::Core(E::InvalidArgument(_)) => StatusCode::BAD_REQUEST,
            ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::Config(_) => "config",
            ServiceError::Startup(_) => "startup",
            ServiceError::Unauthorized(_) => "unauthorized",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::Core(fm2_core::Error::Game(_)) => "game",
            ServiceError::Core(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = serde_json::json!({"error": self.kind(), "message": self.to_string()});
        (status, axum::Json(body)).into_response()
    }
}

/// Loads corpus and index, replays the event log and attaches it as the
/// engine's sink.
pub fn build_state(config: &ServerConfig, clock: Arc<dyn Clock>) -> Result<AppState, ServiceError> {
    let corpus = Corpus::open(&config.corpus)
        .map_err(|e| ServiceError::Startup(format!("corpus {}: {e}", config.corpus.display())))?;
    let index = SparseIndex::load(&config.index)
        .map_err(|e| ServiceError::Startup(format!("index {}: {e}", config.index.display())))?;
    if index.doc_count() != corpus.len() {
        return Err(ServiceError::Startup(format!(
            "index covers {} passages, corpus has {}",
            index.doc_count(),
            corpus.len()
        )));
    }
    if let Some(dir) = config.event_log.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(fm2_core::Error::from)?;
    }
    let (mut log, records) = EventLog::open(&config.event_log)?;
    log.set_sync(config.sync_log);
    let engine = GameEngine::restore(Arc::new(corpus), Arc::new(index), config.game.clone(), &records)?;
    log::info!(
        "replayed {} events, {} open rounds",
        records.len(),
        engine.state().open_rounds().count()
    );
    Ok(AppState::new(engine.with_sink(Box::new(log)), clock, config.session_ttl_secs))
}

/// Serves until `shutdown` resolves, then flushes the event log.
pub async fn serve(
    config: &ServerConfig,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let addr = format!("{}:{}", config.host, config.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| ServiceError::Startup(format!("bind {addr}: {e}")))?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::Startup(e.to_string()))?;
    state.engine().flush()?;
    log::info!("event log flushed");
    Ok(())
}
