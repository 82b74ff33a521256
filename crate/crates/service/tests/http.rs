use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use scicafe_service::protocol::{hello_line, subscribe_line, ServerFrame};
use scicafe_service::server::bind;
use scicafe_service::{Service, ServiceConfig, VirtualClock};
use serde_json::{json, Value};

struct Running {
    http: SocketAddr,
    line: SocketAddr,
    _stop: tokio::sync::oneshot::Sender<()>,
}

fn start() -> Running {
    let config = ServiceConfig {
        listen: "127.0.0.1:0".into(),
        line_listen: Some("127.0.0.1:0".into()),
        ..ServiceConfig::default()
    };
    let svc = Arc::new(Service::in_memory(config, Arc::new(VirtualClock::at(0))));
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let (bound, serving) = bind(svc, async {
                let _ = stopped.await;
            })
            .await
            .unwrap();
            tx.send(bound).unwrap();
            serving.await.unwrap();
        });
    });
    let bound = rx.recv().unwrap();
    Running {
        http: bound.http,
        line: bound.line.unwrap(),
        _stop: stop,
    }
}

fn client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::new()
}

#[test]
fn session_lifecycle_over_http() {
    let srv = start();
    let base = format!("http://{}", srv.http);
    let http = client();
    assert_eq!(http.get(format!("{base}/health")).send().unwrap().text().unwrap(), "ok");

    let anon = http
        .post(format!("{base}/sessions"))
        .json(&json!({"title": "Energy Futures", "tables": 2}))
        .send()
        .unwrap();
    assert_eq!(anon.status(), 403);

    let created: Value = http
        .post(format!("{base}/sessions"))
        .bearer_auth("org")
        .json(&json!({"id": "cafe", "title": "Energy Futures", "tables": 2}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(created["session"], "cafe");

    let envelope = |actor: &str, seq: u64, kind: &str, payload: Value| {
        json!({"v": 1, "session": "cafe", "actor": actor, "client_seq": seq, "type": kind, "payload": payload, "ts": 0})
            .to_string()
    };
    let post = |token: &str, body: String| {
        http.post(format!("{base}/sessions/cafe/commands"))
            .bearer_auth(token)
            .body(body)
            .send()
            .unwrap()
    };
    assert!(post("c0", envelope("c0", 1, "Join", json!({"table": 0}))).status().is_success());
    let denied = post("c0", envelope("c0", 2, "AssignChair", json!({"table": 0, "user": "c0"})));
    assert_eq!(denied.status(), 403);
    let body: Value = denied.json().unwrap();
    assert_eq!(body["error"]["code"], "UNAUTHORIZED");
    let spoofed = post("c0", envelope("org", 1, "ForceRotate", json!({})));
    assert_eq!(spoofed.status(), 403);
    assert_eq!(spoofed.json::<Value>().unwrap()["error"]["code"], "AUTH_FAILURE");

    let events: Vec<Value> = http
        .get(format!("{base}/sessions/cafe/events?after=0"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(events.len(), 2);
    let metrics: Value = http.get(format!("{base}/sessions/cafe/metrics")).send().unwrap().json().unwrap();
    assert_eq!(metrics["total_notes"], 0);
    let missing = http.get(format!("{base}/sessions/nope")).send().unwrap();
    assert_eq!(missing.status(), 404);
}

#[test]
fn catalog_and_knowledge_endpoints() {
    let srv = start();
    let base = format!("http://{}", srv.http);
    let http = client();
    let paradigms: Vec<Value> = http.get(format!("{base}/catalog/paradigms")).send().unwrap().json().unwrap();
    assert_eq!(paradigms.len(), 10);
    let verdict: Value = http
        .post(format!("{base}/catalog/validate"))
        .json(&json!({"name": "lonely method", "kind": "Method", "functions": [], "references": []}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(verdict["ok"], false);
    let annotated: Value = http
        .post(format!("{base}/knowledge/annotate"))
        .json(&json!({"text": "Rome hosted a Delphi panel"}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(annotated["mentions"].as_array().unwrap().len(), 2);
}

#[test]
fn delphi_round_trip_over_http() {
    let srv = start();
    let base = format!("http://{}", srv.http);
    let http = client();
    let panel: Vec<Value> = (0..3).map(|i| json!({"id": format!("p{i}"), "category": "citizen"})).collect();
    let opened: Value = http
        .post(format!("{base}/delphi/obs/rounds"))
        .json(&json!({
            "create": {"title": "panel", "plan": ["Online"]},
            "statements": [{"id": "s1", "text": "open data"}],
            "panel": panel,
        }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(opened["round"], "r1");
    for (i, r) in [7, 8, 8].iter().enumerate() {
        let resp = http
            .post(format!("{base}/delphi/obs/responses"))
            .json(&json!({"panelist": format!("p{i}"), "statement": "s1", "rating": r}))
            .send()
            .unwrap();
        assert!(resp.status().is_success());
    }
    let bad = http
        .post(format!("{base}/delphi/obs/responses"))
        .json(&json!({"panelist": "p0", "statement": "s1", "rating": 12}))
        .send()
        .unwrap();
    assert_eq!(bad.status(), 422);
    let agg: Value = http.post(format!("{base}/delphi/obs/aggregate")).send().unwrap().json().unwrap();
    assert_eq!(agg["round"], "r1");
    let csv = http
        .get(format!("{base}/delphi/obs/rounds/r1/stats?format=csv"))
        .send()
        .unwrap()
        .text()
        .unwrap();
    assert!(csv.lines().count() == 2, "{csv}");
    let recs: Vec<Value> = http.get(format!("{base}/delphi/obs/recommendations")).send().unwrap().json().unwrap();
    assert_eq!(recs.len(), 1);
}

fn read_frame(reader: &mut impl BufRead) -> ServerFrame {
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    ServerFrame::from_line(&line).unwrap_or_else(|e| panic!("{line:?}: {e}"))
}

#[test]
fn line_protocol_over_tcp() {
    let srv = start();
    let base = format!("http://{}", srv.http);
    client()
        .post(format!("{base}/sessions"))
        .bearer_auth("org")
        .json(&json!({"id": "cafe", "title": "Energy Futures", "tables": 1}))
        .send()
        .unwrap();

    let stream = TcpStream::connect(srv.line).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut writer = stream.try_clone().unwrap();
    let mut reader = BufReader::new(stream);
    let session = scicafe_core::session::SessionId::new("cafe");
    writeln!(writer, "{}", hello_line("p1")).unwrap();
    assert!(matches!(read_frame(&mut reader), ServerFrame::Welcome(w) if w.welcome.user.as_str() == "p1"));
    writeln!(writer, "{}", subscribe_line(&session, Some(0))).unwrap();
    assert!(matches!(read_frame(&mut reader), ServerFrame::Event(e) if e.seq == 1));
    assert!(matches!(read_frame(&mut reader), ServerFrame::Subscribed(_)));
    writeln!(
        writer,
        r#"{{"v":1,"session":"cafe","actor":"p1","client_seq":1,"type":"Join","payload":{{"table":0}},"ts":0}}"#
    )
    .unwrap();
    assert!(matches!(read_frame(&mut reader), ServerFrame::Event(e) if e.seq == 2 && e.ack.is_some()));
    assert!(matches!(read_frame(&mut reader), ServerFrame::Ack(a) if a.ack.seq == 2));
}
