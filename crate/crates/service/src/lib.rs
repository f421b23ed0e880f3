//! Multi-tenant HTTP service: provider accounts and API keys, repository
//! registration, background harvest/build jobs, and model serving under
//! `/api/v1`.

pub mod api;
pub mod app;
pub mod auth;
pub mod config;
pub mod domain;
pub mod error;
mod jobs;
pub mod notify;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use tokio::net::TcpListener;
use tracing::info;

pub use app::AppState;
pub use config::{Config, ConfigError};
pub use error::ApiError;
pub use notify::{JobEvent, LogNotifier, Notifier};
pub use store::{Store, StoreError};

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        info!(%addr, "listening");
    }
    axum::serve(listener, api::router(state)).with_graceful_shutdown(shutdown).await
}
