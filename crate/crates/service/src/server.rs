//! Listeners and the rotation ticker.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;

use crate::app::Service;
use crate::conn::{ChannelSink, Connection};
use crate::http::router;

/// Addresses actually bound, useful when configured with port 0.
#[derive(Debug, Clone, Copy)]
pub struct Bound {
    pub http: SocketAddr,
    pub line: Option<SocketAddr>,
}

/// Serves the raw line protocol on an already bound listener.
pub async fn serve_lines(listener: TcpListener, svc: Arc<Service>) {
    loop {
        let Ok((stream, peer)) = listener.accept().await else { continue };
        tracing::debug!(%peer, "line client connected");
        tokio::spawn(serve_line_client(stream, svc.clone()));
    }
}

async fn serve_line_client(stream: TcpStream, svc: Arc<Service>) {
    let (read, mut write) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(mut line) = rx.recv().await {
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut conn = Connection::new(svc.hub.clone(), svc.auth.clone(), Arc::new(ChannelSink(tx)));
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        conn.handle_line(&line);
    }
    conn.close();
    drop(conn);
    let _ = writer.await;
}

/// Fires due rotations every `rotation_tick_ms`.
pub async fn run_ticker(svc: Arc<Service>) {
    let mut every = tokio::time::interval(Duration::from_millis(svc.config.rotation_tick_ms.max(1)));
    every.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        every.tick().await;
        let fired = svc.hub.tick();
        if fired > 0 {
            tracing::info!(fired, "scheduled rotations");
        }
    }
}

/// Binds the configured listeners and returns their addresses plus a future
/// that serves until `shutdown` resolves.
pub async fn bind(
    svc: Arc<Service>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<(Bound, impl Future<Output = std::io::Result<()>>)> {
    let http = TcpListener::bind(&svc.config.listen).await?;
    let line = match &svc.config.line_listen {
        Some(addr) => Some(TcpListener::bind(addr).await?),
        None => None,
    };
    let bound = Bound {
        http: http.local_addr()?,
        line: line.as_ref().map(|l| l.local_addr()).transpose()?,
    };
    let running = async move {
        let ticker = tokio::spawn(run_ticker(svc.clone()));
        let lines = line.map(|l| tokio::spawn(serve_lines(l, svc.clone())));
        let result = axum::serve(http, router(svc)).with_graceful_shutdown(shutdown).await;
        ticker.abort();
        if let Some(l) = lines {
            l.abort();
        }
        result
    };
    Ok((bound, running))
}
