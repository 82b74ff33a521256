//! Request/response API and the WebSocket entry to the wire protocol.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use scicafe_core::catalog::{CatalogEntry, ParadigmId, Subfunction};
use scicafe_core::delphi::{stats_csv, PanelistId, RoundId, StatementId};
use scicafe_core::session::{SessionId, UserId};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;

use crate::app::{ApiError, CreateSessionRequest, RecommendRequest, Service};
use crate::conn::{ChannelSink, Connection};
use crate::delphi::{NewProcess, OpenRequest};
use crate::protocol::{parse_client_frame, ClientFrame};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({"error": {"code": self.code, "message": self.message}}))).into_response()
    }
}

type Shared = Arc<Service>;
type ApiResult<T> = Result<Json<T>, ApiError>;

fn viewer(svc: &Service, headers: &HeaderMap) -> Result<Option<UserId>, ApiError> {
    let Some(value) = headers.get(header::AUTHORIZATION) else {
        return Ok(None);
    };
    let token = value
        .to_str()
        .ok()
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::forbidden("expected a bearer token"))?;
    svc.auth
        .resolve(token)
        .map(Some)
        .ok_or_else(|| ApiError::forbidden("unknown token"))
}

fn caller(svc: &Service, headers: &HeaderMap) -> Result<UserId, ApiError> {
    viewer(svc, headers)?.ok_or_else(|| ApiError::forbidden("authentication required"))
}

pub fn router(svc: Shared) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(session_state))
        .route("/sessions/{id}/events", get(session_events))
        .route("/sessions/{id}/commands", post(session_command))
        .route("/sessions/{id}/archive", get(fetch_archive).post(archive_session))
        .route("/sessions/{id}/metrics", get(session_metrics))
        .route("/sessions/{id}/alerts", get(moderation_alerts))
        .route("/delphi", get(delphi_list).post(delphi_create))
        .route("/delphi/{id}", get(delphi_get))
        .route("/delphi/{id}/rounds", post(delphi_open))
        .route("/delphi/{id}/offline", post(delphi_offline))
        .route("/delphi/{id}/responses", post(delphi_respond))
        .route("/delphi/{id}/close", post(delphi_close))
        .route("/delphi/{id}/aggregate", post(delphi_aggregate))
        .route("/delphi/{id}/rounds/{round}/stats", get(delphi_stats))
        .route("/delphi/{id}/recommendations", get(delphi_export))
        .route("/catalog/paradigms", get(catalog_paradigms))
        .route("/catalog/classify", post(catalog_classify))
        .route("/catalog/compose", post(catalog_compose))
        .route("/catalog/validate", post(catalog_validate))
        .route("/knowledge/annotate", post(knowledge_annotate))
        .route("/knowledge/keywords", post(knowledge_keywords))
        .route("/knowledge/recommend", post(knowledge_recommend))
        .route("/ws", get(websocket))
        .with_state(svc)
}

async fn list_sessions(State(svc): State<Shared>, headers: HeaderMap) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    Ok(Json(json!(svc.list_sessions(who.as_ref()))))
}

async fn create_session(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Json(req): Json<CreateSessionRequest>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let organizer = caller(&svc, &headers)?;
    let created = svc.create_session(&req, &organizer)?;
    Ok((StatusCode::CREATED, Json(json!(created))))
}

async fn session_state(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    Ok(Json(json!(svc.session_state(&SessionId::new(id), who.as_ref())?)))
}

#[derive(Deserialize)]
struct EventsQuery {
    #[serde(default)]
    after: u64,
}

async fn session_events(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    let id = SessionId::new(id);
    svc.session_state(&id, who.as_ref())?;
    Ok(Json(json!(svc.hub.events(&id, q.after).unwrap_or_default())))
}

/// One command envelope as a plain request; answered with the ack body.
async fn session_command(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: String,
) -> ApiResult<serde_json::Value> {
    let user = caller(&svc, &headers)?;
    match parse_client_frame(&body).map_err(ApiError::from)? {
        ClientFrame::Command(env, cmd) if env.session.as_str() == id => {
            Ok(Json(json!(svc.hub.ingest(&env, &cmd, &user)?)))
        }
        ClientFrame::Command(..) => Err(ApiError::bad_request("envelope session does not match the path")),
        _ => Err(ApiError::bad_request("expected a command envelope")),
    }
}

async fn archive_session(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<serde_json::Value> {
    let user = caller(&svc, &headers)?;
    Ok(Json(json!(svc.archive_session(&SessionId::new(id), &user)?)))
}

async fn fetch_archive(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    Ok(Json(json!(svc.fetch_archive(&SessionId::new(id), who.as_ref())?)))
}

async fn session_metrics(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    Ok(Json(json!(svc.session_metrics(&SessionId::new(id), who.as_ref())?)))
}

#[derive(Deserialize)]
struct AlertQuery {
    #[serde(default = "default_threshold")]
    threshold: u64,
}

fn default_threshold() -> u64 {
    60
}

async fn moderation_alerts(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<AlertQuery>,
) -> ApiResult<serde_json::Value> {
    let who = viewer(&svc, &headers)?;
    Ok(Json(json!(svc.moderation_alerts(&SessionId::new(id), who.as_ref(), q.threshold)?)))
}

async fn delphi_list(State(svc): State<Shared>) -> Json<serde_json::Value> {
    Json(json!(svc.delphi.list()))
}

#[derive(Deserialize)]
struct CreateProcess {
    id: String,
    #[serde(flatten)]
    new: NewProcess,
}

async fn delphi_create(
    State(svc): State<Shared>,
    Json(req): Json<CreateProcess>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    svc.delphi.create(&req.id, req.new)?;
    Ok((StatusCode::CREATED, Json(json!({"id": req.id}))))
}

async fn delphi_get(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    let p = svc
        .delphi
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no Delphi process {id}")))?;
    Ok(Json(json!(p)))
}

async fn delphi_open(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<OpenRequest>,
) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(svc.delphi.open_round(&id, req)?)))
}

async fn delphi_offline(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    svc.delphi.complete_offline(&id, svc.hub.clock().now())?;
    Ok(Json(json!({"ok": true})))
}

#[derive(Deserialize)]
struct Respond {
    panelist: PanelistId,
    statement: StatementId,
    rating: u8,
    #[serde(default)]
    comment: Option<String>,
}

async fn delphi_respond(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(r): Json<Respond>,
) -> ApiResult<serde_json::Value> {
    let outcome = svc
        .delphi
        .respond(&id, &r.panelist, &r.statement, r.rating, r.comment)?;
    Ok(Json(json!(outcome)))
}

async fn delphi_close(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    svc.delphi.close_round(&id)?;
    Ok(Json(json!({"ok": true})))
}

async fn delphi_aggregate(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    let (round, stats) = svc.delphi.aggregate(&id, None)?;
    Ok(Json(json!({"round": round, "stats": stats})))
}

#[derive(Deserialize)]
struct FormatQuery {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    finish: bool,
}

async fn delphi_stats(
    State(svc): State<Shared>,
    Path((id, round)): Path<(String, String)>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let (_, stats) = svc.delphi.aggregate(&id, Some(&RoundId(round)))?;
    Ok(match q.format.as_deref() {
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv")], stats_csv(&stats)).into_response(),
        _ => Json(json!(stats)).into_response(),
    })
}

async fn delphi_export(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(svc.delphi.export(&id, q.finish)?)))
}

async fn catalog_paradigms(State(svc): State<Shared>) -> Json<serde_json::Value> {
    Json(json!(svc.catalog.paradigms().collect::<Vec<_>>()))
}

#[derive(Deserialize)]
struct Features {
    features: BTreeSet<Subfunction>,
}

async fn catalog_classify(State(svc): State<Shared>, Json(f): Json<Features>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(svc.classify(&f.features)?)))
}

#[derive(Deserialize)]
struct Paradigms {
    paradigms: Vec<ParadigmId>,
}

async fn catalog_compose(State(svc): State<Shared>, Json(p): Json<Paradigms>) -> Json<serde_json::Value> {
    Json(json!(svc.compose(&p.paradigms)))
}

async fn catalog_validate(State(svc): State<Shared>, Json(e): Json<CatalogEntry>) -> Json<serde_json::Value> {
    let violations = svc.validate_entry(&e);
    let messages: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Json(json!({"ok": violations.is_empty(), "violations": violations, "messages": messages}))
}

#[derive(Deserialize)]
struct Text {
    text: String,
}

async fn knowledge_annotate(State(svc): State<Shared>, Json(t): Json<Text>) -> ApiResult<serde_json::Value> {
    let annotated = tokio::task::spawn_blocking(move || svc.annotate(&t.text))
        .await
        .map_err(|e| ApiError::new(500, "INTERNAL", e.to_string()))??;
    Ok(Json(json!(annotated)))
}

#[derive(Deserialize)]
struct KeywordRequest {
    documents: Vec<(String, String)>,
    document: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    10
}

async fn knowledge_keywords(State(svc): State<Shared>, Json(r): Json<KeywordRequest>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(svc.keywords(&r.documents, &r.document, r.k)?)))
}

async fn knowledge_recommend(State(svc): State<Shared>, Json(r): Json<RecommendRequest>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(svc.recommend(&r)?)))
}

async fn websocket(State(svc): State<Shared>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| serve_socket(svc, socket))
}

async fn serve_socket(svc: Shared, mut socket: WebSocket) {
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let mut conn = Connection::new(svc.hub.clone(), svc.auth.clone(), Arc::new(ChannelSink(tx)));
    loop {
        tokio::select! {
            out = rx.recv() => {
                let Some(line) = out else { break };
                if socket.send(Message::Text(line.into())).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => {
                match incoming {
                    Some(Ok(Message::Text(text))) => {
                        for line in text.lines() {
                            conn.handle_line(line);
                        }
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                }
            }
        }
    }
    conn.close();
}
