//! The service's operations, one method per request/response endpoint.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use scicafe_core::catalog::{
    classify, compose, validate_entry, Catalog, CatalogEntry, CatalogError, ParadigmId,
    ParadigmProfile, Subfunction, Violation,
};
use scicafe_core::knowledge::{
    annotate, extract_keywords, keyword_vector, moderation_alerts, recommend_above,
    session_metrics, AnnotatedText, Corpus, Gazetteer, KeywordVector, KnowledgeError,
    ModerationAlert, ParticipationSummary, RepositoryClient, RepositoryError, Tokenizer,
};
use scicafe_core::session::{
    Command, CoreError, PrivacyLevel, SessionArchive, SessionConfig, SessionId, SessionState,
    UserId,
};
use serde::{Deserialize, Serialize};

use crate::auth::{self, Authenticator};
use crate::clock::Clock;
use crate::config::ServiceConfig;
use crate::delphi::{DelphiRegistry, RegistryError};
use crate::hub::{may_observe, Hub, HubError, RecoveryReport, SessionSummary};
use crate::protocol::ErrorBody;
use crate::repo_http::{client_from_config, RepoSetupError};
use crate::store::{EventStore, FileStore, MemoryStore, StoreError};

/// Error returned by every operation: an HTTP-ish status plus a stable code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(404, "NOT_FOUND", what)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(403, "AUTH_FAILURE", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "BAD_REQUEST", message)
    }

    /// Infrastructure trouble rather than a rule of the domain.
    pub fn is_internal(&self) -> bool {
        self.status >= 500
    }
}

fn upper_snake(name: &str) -> String {
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() && i > 0 {
            out.push('_');
        }
        out.push(c.to_ascii_uppercase());
    }
    out
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match e {
            CoreError::Unauthorized { .. } => 403,
            CoreError::UnknownTable(_) | CoreError::UnknownNote(_) | CoreError::UnknownUser(_) => 404,
            _ => 422,
        };
        Self::new(status, &e.code(), e.to_string())
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        match e {
            HubError::Core(c) => c.into(),
            HubError::SessionExists(_) => Self::new(409, "SESSION_EXISTS", e.to_string()),
            HubError::InvalidId(_) => Self::bad_request(e.to_string()),
            HubError::Store(s) => s.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self::new(500, "IO_FAILURE", e.to_string())
    }
}

impl From<ErrorBody> for ApiError {
    fn from(e: ErrorBody) -> Self {
        let status = match e.code.as_str() {
            "UNKNOWN_SESSION" => 404,
            "AUTH_FAILURE" | "UNAUTHORIZED" => 403,
            "MALFORMED" | "UNKNOWN_COMMAND" | "UNSUPPORTED_VERSION" => 400,
            "IO_FAILURE" | "READ_ONLY" => 503,
            _ => 422,
        };
        Self::new(status, &e.code, e.message)
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match &e {
            RegistryError::UnknownProcess(_) | RegistryError::UnknownRound(_) => Self::not_found(e.to_string()),
            RegistryError::ProcessExists(_) => Self::new(409, "PROCESS_EXISTS", e.to_string()),
            RegistryError::InvalidId(_) => Self::bad_request(e.to_string()),
            RegistryError::Delphi(d) => Self::new(422, &upper_snake(d.name()), e.to_string()),
            RegistryError::Io(_) | RegistryError::Corrupt(..) => Self::new(500, "IO_FAILURE", e.to_string()),
        }
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        Self::new(422, "CATALOG", e.to_string())
    }
}

impl From<KnowledgeError> for ApiError {
    fn from(e: KnowledgeError) -> Self {
        Self::new(422, "KNOWLEDGE", e.to_string())
    }
}

impl From<RepositoryError> for ApiError {
    fn from(e: RepositoryError) -> Self {
        Self::new(503, "REPOSITORY_UNAVAILABLE", e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub id: Option<SessionId>,
    pub title: String,
    pub tables: u32,
    #[serde(default)]
    pub rotation_minutes: Option<u32>,
    /// Named areas after the implicit "unsorted".
    #[serde(default)]
    pub areas: Option<Vec<String>>,
    /// Restricts the session to these users plus the organizer.
    #[serde(default)]
    pub restricted_to: Option<Vec<UserId>>,
    #[serde(default)]
    pub table_capacity: Option<u32>,
    #[serde(default)]
    pub recency_threshold_seconds: Option<u64>,
}

impl CreateSessionRequest {
    pub fn new(title: &str, tables: u32) -> Self {
        Self {
            id: None,
            title: title.to_owned(),
            tables,
            rotation_minutes: None,
            areas: None,
            restricted_to: None,
            table_capacity: None,
            recency_threshold_seconds: None,
        }
    }

    pub fn config(&self) -> SessionConfig {
        let mut cfg = SessionConfig::new(&self.title, self.tables);
        if let Some(areas) = &self.areas {
            let names: Vec<&str> = areas.iter().map(String::as_str).collect();
            cfg = cfg.with_areas(&names);
        }
        if let Some(m) = self.rotation_minutes {
            cfg = cfg.with_rotation_minutes(m);
        }
        if let Some(group) = &self.restricted_to {
            cfg = cfg.with_privacy(PrivacyLevel::Restricted {
                group: group.iter().cloned().collect(),
            });
        }
        if let Some(c) = self.table_capacity {
            cfg = cfg.with_capacity(c);
        }
        if let Some(r) = self.recency_threshold_seconds {
            cfg.recency_threshold_seconds = r;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session: SessionId,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    pub profile: String,
    pub items: Vec<(String, String)>,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    5
}

/// Everything a running server (or the CLI in-process) needs.
pub struct Service {
    pub config: ServiceConfig,
    pub hub: Arc<Hub>,
    pub delphi: Arc<DelphiRegistry>,
    pub catalog: Arc<Catalog>,
    pub gazetteer: Arc<Gazetteer>,
    pub repository: Arc<RepositoryClient>,
    pub tokenizer: Arc<Tokenizer>,
    pub auth: Arc<dyn Authenticator>,
    pub recovery: Vec<RecoveryReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Delphi(#[from] RegistryError),
    #[error(transparent)]
    Repository(#[from] RepoSetupError),
}

impl Service {
    fn assemble(
        config: ServiceConfig,
        store: Arc<dyn EventStore>,
        clock: Arc<dyn Clock>,
        delphi: DelphiRegistry,
    ) -> Result<Self, StartupError> {
        let hub = Hub::new(store, clock).with_snapshot_interval(config.snapshot_interval);
        let recovery = hub.recover()?;
        for r in &recovery {
            if let Some(t) = &r.torn {
                tracing::warn!(session = %r.session, line = t.line, "recovered with a torn tail");
            }
        }
        Ok(Self {
            hub: Arc::new(hub),
            delphi: Arc::new(delphi),
            catalog: Arc::new(Catalog::shipped()),
            gazetteer: Arc::new(Gazetteer::shipped()),
            repository: Arc::new(client_from_config(&config.repository)?),
            tokenizer: Arc::new(Tokenizer::default()),
            auth: auth::from_config(&config.auth),
            recovery,
            config,
        })
    }

    /// File-backed service rooted at `config.storage_dir`.
    pub fn open(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, StartupError> {
        let root = config.storage_dir.clone();
        let store = Arc::new(FileStore::open(&root)?);
        let delphi = DelphiRegistry::open(root.join("delphi"))?;
        Self::assemble(config, store, clock, delphi)
    }

    pub fn in_memory(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        Self::with_store(config, Arc::new(MemoryStore::new()), clock)
    }

    pub fn with_store(config: ServiceConfig, store: Arc<dyn EventStore>, clock: Arc<dyn Clock>) -> Self {
        Self::assemble(config, store, clock, DelphiRegistry::in_memory())
            .expect("in-memory stores and shipped data always load")
    }

    pub fn storage_dir(&self) -> &Path {
        &self.config.storage_dir
    }

    fn observable(&self, id: &SessionId, viewer: Option<&UserId>) -> Result<SessionState, ApiError> {
        let state = self
            .hub
            .state(id)
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))?;
        if !may_observe(&state, viewer) {
            return Err(ApiError::forbidden(format!("session {id} is restricted")));
        }
        Ok(state)
    }

    pub fn create_session(
        &self,
        req: &CreateSessionRequest,
        organizer: &UserId,
    ) -> Result<CreatedSession, ApiError> {
        let session = self
            .hub
            .create_session(req.id.clone(), req.config(), organizer.clone())?;
        Ok(CreatedSession { session, seq: 1 })
    }

    /// Sessions the viewer may see.
    pub fn list_sessions(&self, viewer: Option<&UserId>) -> Vec<SessionSummary> {
        self.hub
            .summaries()
            .into_iter()
            .filter(|s| {
                self.hub
                    .state(&s.id)
                    .is_some_and(|st| may_observe(&st, viewer))
            })
            .collect()
    }

    pub fn session_state(&self, id: &SessionId, viewer: Option<&UserId>) -> Result<SessionState, ApiError> {
        self.observable(id, viewer)
    }

    /// Archives the session on behalf of `actor` (normally its organizer)
    /// unless already archived, and returns the archive.
    pub fn archive_session(&self, id: &SessionId, actor: &UserId) -> Result<SessionArchive, ApiError> {
        let state = self.observable(id, Some(actor))?;
        if let Some(a) = state.archive() {
            return Ok(a);
        }
        let seq = self.hub.state(id).map(|s| s.last_seq).unwrap_or(0);
        self.hub.submit(id, actor, u64::MAX - seq, &Command::Archive {})?;
        self.fetch_archive(id, Some(actor))
    }

    pub fn fetch_archive(&self, id: &SessionId, viewer: Option<&UserId>) -> Result<SessionArchive, ApiError> {
        self.observable(id, viewer)?
            .archive()
            .ok_or_else(|| ApiError::new(409, "NOT_ARCHIVED", format!("session {id} is still live")))
    }

    pub fn session_metrics(&self, id: &SessionId, viewer: Option<&UserId>) -> Result<ParticipationSummary, ApiError> {
        self.observable(id, viewer)?;
        let events = self.hub.events(id, 0).unwrap_or_default();
        Ok(session_metrics(&events)?)
    }

    pub fn moderation_alerts(
        &self,
        id: &SessionId,
        viewer: Option<&UserId>,
        threshold_seconds: u64,
    ) -> Result<Vec<ModerationAlert>, ApiError> {
        self.observable(id, viewer)?;
        let events = self.hub.events(id, 0).unwrap_or_default();
        Ok(moderation_alerts(&events, self.hub.clock().now(), threshold_seconds)?)
    }

    pub fn classify(&self, features: &BTreeSet<Subfunction>) -> Result<ParadigmProfile, ApiError> {
        Ok(classify(&self.catalog, features)?)
    }

    pub fn compose(&self, ids: &[ParadigmId]) -> BTreeSet<Subfunction> {
        compose(&self.catalog, ids)
    }

    pub fn validate_entry(&self, entry: &CatalogEntry) -> Vec<Violation> {
        validate_entry(entry)
    }

    pub fn annotate(&self, text: &str) -> Result<AnnotatedText, ApiError> {
        Ok(annotate(text, &self.gazetteer, &self.repository)?)
    }

    /// Keywords of the document `id` among `docs`.
    pub fn keywords(&self, docs: &[(String, String)], id: &str, k: usize) -> Result<Vec<(String, f64)>, ApiError> {
        let corpus = Corpus::from_texts(docs.iter().map(|(i, t)| (i.as_str(), t.as_str())), &self.tokenizer);
        Ok(extract_keywords(id, &corpus, k)?)
    }

    /// Items ranked against a free-text interest profile, tf-idf weighted
    /// over the items plus the profile.
    pub fn recommend(&self, req: &RecommendRequest) -> Result<Vec<(String, f64)>, ApiError> {
        const PROFILE: &str = "\u{0}profile";
        let mut docs: Vec<(&str, &str)> = req.items.iter().map(|(i, t)| (i.as_str(), t.as_str())).collect();
        docs.push((PROFILE, req.profile.as_str()));
        let corpus = Corpus::from_texts(docs, &self.tokenizer);
        let vec_of = |id: &str| keyword_vector(id, &corpus).unwrap_or_default();
        let profile = keyword_vector(PROFILE, &corpus)?;
        let items: Vec<(String, KeywordVector)> = req.items.iter().map(|(i, _)| (i.clone(), vec_of(i))).collect();
        Ok(recommend_above(
            &profile,
            items.iter().map(|(i, v)| (i.as_str(), v)),
            req.k.max(1),
            0.0,
        ))
    }
}
