//! Where subcommands are carried out: the local data directory or a server.

use std::collections::{BTreeMap, BTreeSet};

use scicafe_core::catalog::{CatalogEntry, ParadigmProfile, Subfunction, Violation};
use scicafe_core::delphi::{PanelistId, Recommendation, RoundId, StatementId, StatementStats, SubmitOutcome};
use scicafe_core::knowledge::ParticipationSummary;
use scicafe_core::session::{SessionArchive, SessionId, UserId};
use scicafe_service::app::CreatedSession;
use scicafe_service::delphi::{OpenRequest, OpenedRound};
use scicafe_service::hub::SessionSummary;
use scicafe_service::sim::{simulate, ParseError, SimReport};
use scicafe_service::{ApiError, CreateSessionRequest, Service};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub panelist: PanelistId,
    pub statement: StatementId,
    pub rating: u8,
    #[serde(default)]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: RoundId,
    pub stats: BTreeMap<StatementId, StatementStats>,
}

/// One method per subcommand.
pub trait Backend {
    fn create_session(&self, req: &CreateSessionRequest, organizer: &UserId) -> Result<CreatedSession, ApiError>;
    fn list_sessions(&self, viewer: &UserId) -> Result<Vec<SessionSummary>, ApiError>;
    fn archive_session(&self, id: &SessionId, actor: &UserId) -> Result<SessionArchive, ApiError>;
    fn session_metrics(&self, id: &SessionId, viewer: &UserId) -> Result<ParticipationSummary, ApiError>;
    fn delphi_open(&self, process: &str, req: OpenRequest) -> Result<OpenedRound, ApiError>;
    fn delphi_offline(&self, process: &str) -> Result<(), ApiError>;
    fn delphi_respond(&self, process: &str, rating: &Rating) -> Result<SubmitOutcome, ApiError>;
    fn delphi_aggregate(&self, process: &str, round: Option<&RoundId>) -> Result<RoundStats, ApiError>;
    fn delphi_export(&self, process: &str, finish: bool) -> Result<Vec<Recommendation>, ApiError>;
    fn classify(&self, features: &BTreeSet<Subfunction>) -> Result<ParadigmProfile, ApiError>;
    fn validate(&self, entry: &CatalogEntry) -> Result<Vec<Violation>, ApiError>;

    /// Always in-process, on a fresh server and virtual clock.
    fn simulate(&self, script: &str) -> Result<SimReport, ParseError> {
        simulate(script)
    }
}

/// Operates on the configured data directory directly.
pub struct LocalBackend {
    pub service: Service,
}

impl Backend for LocalBackend {
    fn create_session(&self, req: &CreateSessionRequest, organizer: &UserId) -> Result<CreatedSession, ApiError> {
        self.service.create_session(req, organizer)
    }

    fn list_sessions(&self, viewer: &UserId) -> Result<Vec<SessionSummary>, ApiError> {
        Ok(self.service.list_sessions(Some(viewer)))
    }

    fn archive_session(&self, id: &SessionId, actor: &UserId) -> Result<SessionArchive, ApiError> {
        self.service.archive_session(id, actor)
    }

    fn session_metrics(&self, id: &SessionId, viewer: &UserId) -> Result<ParticipationSummary, ApiError> {
        self.service.session_metrics(id, Some(viewer))
    }

    fn delphi_open(&self, process: &str, req: OpenRequest) -> Result<OpenedRound, ApiError> {
        Ok(self.service.delphi.open_round(process, req)?)
    }

    fn delphi_offline(&self, process: &str) -> Result<(), ApiError> {
        Ok(self.service.delphi.complete_offline(process, self.service.hub.clock().now())?)
    }

    fn delphi_respond(&self, process: &str, r: &Rating) -> Result<SubmitOutcome, ApiError> {
        Ok(self
            .service
            .delphi
            .respond(process, &r.panelist, &r.statement, r.rating, r.comment.clone())?)
    }

    fn delphi_aggregate(&self, process: &str, round: Option<&RoundId>) -> Result<RoundStats, ApiError> {
        let (round, stats) = self.service.delphi.aggregate(process, round)?;
        Ok(RoundStats { round, stats })
    }

    fn delphi_export(&self, process: &str, finish: bool) -> Result<Vec<Recommendation>, ApiError> {
        Ok(self.service.delphi.export(process, finish)?)
    }

    fn classify(&self, features: &BTreeSet<Subfunction>) -> Result<ParadigmProfile, ApiError> {
        self.service.classify(features)
    }

    fn validate(&self, entry: &CatalogEntry) -> Result<Vec<Violation>, ApiError> {
        Ok(self.service.validate_entry(entry))
    }
}

/// Calls the request/response API of a running server.
pub struct RemoteBackend {
    base: String,
    token: String,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ErrorEnvelope {
    error: ErrorDetail,
}

#[derive(Deserialize)]
struct ErrorDetail {
    code: String,
    message: String,
}

impl RemoteBackend {
    pub fn new(base: &str, token: &str) -> Self {
        Self {
            base: base.trim_end_matches('/').to_owned(),
            token: token.to_owned(),
            http: reqwest::blocking::Client::new(),
        }
    }

    fn send<T: DeserializeOwned>(&self, req: reqwest::blocking::RequestBuilder) -> Result<T, ApiError> {
        let unreachable = |e: reqwest::Error| ApiError::new(503, "UNREACHABLE", e.to_string());
        let resp = req.bearer_auth(&self.token).send().map_err(unreachable)?;
        let status = resp.status();
        let body = resp.text().map_err(unreachable)?;
        if status.is_success() {
            serde_json::from_str(&body).map_err(|e| ApiError::new(502, "BAD_RESPONSE", e.to_string()))
        } else {
            let detail = serde_json::from_str::<ErrorEnvelope>(&body)
                .map(|e| e.error)
                .unwrap_or(ErrorDetail {
                    code: "HTTP".into(),
                    message: body,
                });
            Err(ApiError::new(status.as_u16(), &detail.code, detail.message))
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ApiError> {
        self.send(self.http.get(format!("{}{path}", self.base)))
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T, ApiError> {
        self.send(self.http.post(format!("{}{path}", self.base)).json(body))
    }
}

impl Backend for RemoteBackend {
    fn create_session(&self, req: &CreateSessionRequest, _organizer: &UserId) -> Result<CreatedSession, ApiError> {
        self.post("/sessions", req)
    }

    fn list_sessions(&self, _viewer: &UserId) -> Result<Vec<SessionSummary>, ApiError> {
        self.get("/sessions")
    }

    fn archive_session(&self, id: &SessionId, _actor: &UserId) -> Result<SessionArchive, ApiError> {
        self.post(&format!("/sessions/{id}/archive"), &json!({}))
    }

    fn session_metrics(&self, id: &SessionId, _viewer: &UserId) -> Result<ParticipationSummary, ApiError> {
        self.get(&format!("/sessions/{id}/metrics"))
    }

    fn delphi_open(&self, process: &str, req: OpenRequest) -> Result<OpenedRound, ApiError> {
        self.post(&format!("/delphi/{process}/rounds"), &req)
    }

    fn delphi_offline(&self, process: &str) -> Result<(), ApiError> {
        self.post::<serde_json::Value>(&format!("/delphi/{process}/offline"), &json!({}))
            .map(|_| ())
    }

    fn delphi_respond(&self, process: &str, rating: &Rating) -> Result<SubmitOutcome, ApiError> {
        self.post(&format!("/delphi/{process}/responses"), rating)
    }

    fn delphi_aggregate(&self, process: &str, round: Option<&RoundId>) -> Result<RoundStats, ApiError> {
        match round {
            Some(r) => Ok(RoundStats {
                round: r.clone(),
                stats: self.get(&format!("/delphi/{process}/rounds/{r}/stats"))?,
            }),
            None => self.post(&format!("/delphi/{process}/aggregate"), &json!({})),
        }
    }

    fn delphi_export(&self, process: &str, finish: bool) -> Result<Vec<Recommendation>, ApiError> {
        self.get(&format!("/delphi/{process}/recommendations?finish={finish}"))
    }

    fn classify(&self, features: &BTreeSet<Subfunction>) -> Result<ParadigmProfile, ApiError> {
        self.post("/catalog/classify", &json!({ "features": features }))
    }

    fn validate(&self, entry: &CatalogEntry) -> Result<Vec<Violation>, ApiError> {
        #[derive(Deserialize)]
        struct Verdict {
            violations: Vec<Violation>,
        }
        self.post::<Verdict>("/catalog/validate", entry).map(|v| v.violations)
    }
}
