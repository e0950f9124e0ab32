//! HTTP facade over the perspecml core: catalog, document checks and
//! renders, and persistent elicitation sessions.
//!
//! All routes live under `/api`; everything else is served from the static
//! assets directory when one is configured.

mod api;
mod error;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::response::Html;
use axum::routing::get;
use axum::Router;
use perspecml_core::Catalog;
use tower_http::services::{ServeDir, ServeFile};

pub use error::ApiError;
pub use state::AppState;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    pub assets_dir: Option<PathBuf>,
}

const PLACEHOLDER: &str = include_str!("placeholder.html");

pub fn router(state: Arc<AppState>, assets_dir: Option<PathBuf>) -> Router {
    let app = Router::new().nest("/api", api::routes()).with_state(state);
    match assets_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Loads persisted state, binds, calls `on_ready` with the bound address and
/// serves until interrupted.
pub async fn run(
    catalog: Catalog,
    config: ServerConfig,
    on_ready: impl FnOnce(SocketAddr),
) -> std::io::Result<()> {
    let state = Arc::new(AppState::load(catalog, &config.data_dir)?);
    for warning in state.load_warnings() {
        eprintln!("warning: {warning}");
    }
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    on_ready(listener.local_addr()?);
    axum::serve(listener, router(state, config.assets_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
