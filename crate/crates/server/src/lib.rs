//! Streaming annotation service.
//!
//! Annotators work one sentence per session: the first source token is
//! exposed on creation, then each request either reads one more source
//! token or writes one target token. Every accepted action is appended to a
//! per-session JSONL journal, and reopening the journal directory replays it
//! into identical state.

pub mod error;
pub mod http;
pub mod journal;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use error::{ErrorKind, StoreError};
pub use http::router;
pub use journal::{Durability, Journal, SessionEvent};
pub use store::{SessionStore, SessionView};

/// Environment variable naming the journal directory.
pub const JOURNAL_DIR_ENV: &str = "MONOEVAL_JOURNAL_DIR";

pub struct ServeConfig {
    pub addr: SocketAddr,
    pub journal_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
}

/// Binds and serves until ctrl-c.
pub async fn serve(config: ServeConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = Arc::new(SessionStore::open(&config.journal_dir, Durability::Sync)?);
    let app = router(store, config.static_dir);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, journal = %config.journal_dir.display(), "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
