//! HTTP service over the tracking engine.
//!
//! Scenarios live in memory as immutable snapshots. Each mutation (upload,
//! replace, report ingestion, flag toggle) installs a new snapshot under a
//! fresh token, so readers never observe a half-applied change. Reads are
//! computed on the blocking pool and cached per token, and a request may
//! pin the snapshot it expects with `?token=`; a superseded token gets 409.

pub mod api;
pub mod config;
pub mod error;
pub mod state;

use std::sync::Arc;

use thiserror::Error;
use tracing_subscriber::EnvFilter;

pub use api::{router, TOKEN_HEADER};
pub use config::{ConfigError, ServiceConfig};
pub use error::ApiError;
pub use state::{AppState, Snapshot};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Installs a JSON log subscriber on stderr, filtered by `RUST_LOG`
/// (default `info`). Safe to call more than once.
pub fn init_logging() {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let addr = config.addr()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    let app = router(Arc::new(AppState::new(config)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(config: ServiceConfig) -> Result<(), ServeError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(config))
}
