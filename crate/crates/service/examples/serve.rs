//! In-memory server with both listeners, stopped with ctrl-c.
//!
//! `cargo run -p scicafe-service --example serve`, then for instance
//! `curl -H 'Authorization: Bearer org' -d '{"title":"Demo","tables":2}' -H 'content-type: application/json' localhost:7878/sessions`

use std::sync::Arc;

use scicafe_service::{server, Service, ServiceConfig, SystemClock};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let config = ServiceConfig {
        listen: "127.0.0.1:7878".into(),
        line_listen: Some("127.0.0.1:7879".into()),
        ..Default::default()
    };
    let svc = Arc::new(Service::in_memory(config, Arc::new(SystemClock)));
    let stop = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    let (bound, serving) = server::bind(svc, stop).await?;
    println!("http on {}, lines on {}", bound.http, bound.line.expect("configured"));
    serving.await
}
