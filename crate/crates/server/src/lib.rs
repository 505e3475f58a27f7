//! HTTP/WebSocket front end for [`TelemetryService`] and the clients that
//! talk to it.
//!
//! Routes:
//!
//! | method | path                 | body            | reply                       |
//! |--------|----------------------|-----------------|-----------------------------|
//! | POST   | `/bins`              | `BinRecord` (+ optional `seq`) | 201 created / 200 unchanged / 409 |
//! | GET    | `/bins`              |                 | `[BinRecord]` in registration order |
//! | GET    | `/bins/{id}`         |                 | `BinRecord` / 404           |
//! | DELETE | `/bins/{id}`         |                 | `{"offset"}` / 404          |
//! | GET    | `/bins/{id}/status`  |                 | levels, last seq, heartbeat |
//! | PUT    | `/bins/{id}/status`  | `Envelope`      | `{"offset"}` / 404 / 409 duplicate |
//! | GET    | `/events?since=N`    | WebSocket       | event frames                |
//!
//! With a token configured, every request needs `Authorization: Bearer <token>`
//! or a `token=<token>` query parameter (for browser WebSockets).

mod api;
mod client;
mod stream;

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use binsort_core::telemetry::TelemetryService;
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};

pub use api::{router, ErrorBody};
pub use client::{ClientError, HttpClient};
pub use stream::{watch, StreamFrame, WatchError};

/// Serves `service` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    service: Arc<TelemetryService>,
    token: Option<String>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let closing = Arc::new(watch::channel(false).0);
    let app = api::app(service, token, closing.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            // Open event streams would otherwise hold the shutdown forever.
            closing.send_replace(true);
        })
        .await
}

/// A server running on its own thread and runtime.
pub struct BackgroundServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl BackgroundServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(addr: SocketAddr, service: Arc<TelemetryService>, token: Option<String>) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new().name(format!("binsort-server-{addr}")).spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
            runtime.block_on(async move {
                let listener = TcpListener::from_std(std_listener)?;
                serve(listener, service, token, async {
                    let _ = stopped.await;
                })
                .await
            })
        })?;
        Ok(Self { addr, stop: Some(stop), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://host:port`
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting, closes open event streams and waits for the thread.
    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(thread) => thread.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}
