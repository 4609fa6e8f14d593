use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

use crate::api::{router, AppState};
use crate::db::Database;
use crate::error::BackendError;
use crate::notifier::Notifier;

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub listen: SocketAddr,
    pub db_path: PathBuf,
    pub notifier: Notifier,
    pub device_dir: Option<PathBuf>,
    /// Allow any origin, for a dashboard served from elsewhere.
    pub cors: bool,
}

/// A bound but not yet running server.
pub struct Server {
    listener: TcpListener,
    state: Arc<AppState>,
    cors: bool,
}

impl Server {
    /// Loads the snapshot and binds the socket.
    pub async fn bind(config: ServeConfig) -> Result<Self, BackendError> {
        let db = Database::load(&config.db_path)?;
        let listener = TcpListener::bind(config.listen).await.map_err(|e| {
            BackendError::Io(std::io::Error::new(
                e.kind(),
                format!("bind {}: {e}", config.listen),
            ))
        })?;
        let mut state = AppState::new(db, config.notifier);
        state.db_path = Some(config.db_path);
        state.device_dir = config.device_dir;
        Ok(Server {
            listener,
            state: Arc::new(state),
            cors: config.cors,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves, then flushes the snapshot.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), BackendError> {
        let mut app = router(self.state.clone());
        if self.cors {
            app = app.layer(CorsLayer::permissive());
        }
        tracing::info!(addr = ?self.listener.local_addr().ok(), "listening");
        axum::serve(self.listener, app)
            .with_graceful_shutdown(shutdown)
            .await?;
        let db = self.state.db.lock().await;
        if let Some(path) = &self.state.db_path {
            db.save(path)?;
        }
        Ok(())
    }
}
