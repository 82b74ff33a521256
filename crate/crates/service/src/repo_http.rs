use std::time::Duration;

use scicafe_core::knowledge::{
    FixtureBackend, LookupMode, RepositoryBackend, RepositoryClient, RepositoryError,
};
use serde::Deserialize;

use crate::config::{RepoMode, RepositoryConfig};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Looks surfaces up at `GET <endpoint>?surface=<s>`. A 404 or an
/// empty/absent `uri` field is a miss.
pub struct HttpBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct LookupBody {
    uri: Option<String>,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, RepositoryError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RepositoryError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            client,
        })
    }
}

impl RepositoryBackend for HttpBackend {
    fn lookup(&self, surface: &str) -> Result<Option<String>, RepositoryError> {
        let unavailable = |e: reqwest::Error| RepositoryError::Unavailable(e.to_string());
        let resp = self
            .client
            .get(&self.endpoint)
            .query(&[("surface", surface)])
            .send()
            .map_err(unavailable)?;
        if resp.status() == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        let resp = resp.error_for_status().map_err(unavailable)?;
        let body: LookupBody = resp.json().map_err(unavailable)?;
        Ok(body.uri.filter(|u| !u.is_empty()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RepoSetupError {
    #[error("reading fixture: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture: {0}")]
    Fixture(#[from] scicafe_core::knowledge::KnowledgeError),
    #[error(transparent)]
    Client(#[from] RepositoryError),
}

/// Live endpoint if configured, else the fixture file, else the shipped fixture.
pub fn client_from_config(cfg: &RepositoryConfig) -> Result<RepositoryClient, RepoSetupError> {
    let mode = match cfg.mode {
        RepoMode::Strict => LookupMode::Strict,
        RepoMode::Lenient => LookupMode::Lenient,
    };
    if let Some(endpoint) = &cfg.endpoint {
        let timeout = cfg.timeout_ms.map(Duration::from_millis).unwrap_or(DEFAULT_TIMEOUT);
        return Ok(RepositoryClient::new(HttpBackend::new(endpoint.clone(), timeout)?, mode));
    }
    let backend = match &cfg.fixture {
        Some(path) => FixtureBackend::parse(&std::fs::read_to_string(path)?)?,
        None => FixtureBackend::shipped(),
    };
    Ok(RepositoryClient::new(backend, mode))
}
