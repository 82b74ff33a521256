use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::KnowledgeError;

/// Surface to URI pairs used when no live repository is configured.
pub const SHIPPED_FIXTURE: &str = include_str!("../../data/repository_fixture.tsv");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepositoryError {
    #[error("repository unavailable: {0}")]
    Unavailable(String),
}

/// Something that can resolve an entity surface to a repository URI.
pub trait RepositoryBackend: Send + Sync {
    fn lookup(&self, surface: &str) -> Result<Option<String>, RepositoryError>;
}

/// In-memory backend keyed by lowercased surface.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    entries: HashMap<String, String>,
}

impl FixtureBackend {
    pub fn parse(tsv: &str) -> Result<Self, KnowledgeError> {
        let mut entries = HashMap::new();
        for (i, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, uri) = line.split_once('\t').ok_or_else(|| KnowledgeError::Parse {
                line: i + 1,
                reason: "expected surface<TAB>uri".into(),
            })?;
            let (surface, uri) = (surface.trim(), uri.trim());
            if surface.is_empty() || uri.is_empty() {
                return Err(KnowledgeError::Parse {
                    line: i + 1,
                    reason: "empty surface or uri".into(),
                });
            }
            entries.insert(surface.to_lowercase(), uri.to_owned());
        }
        Ok(Self { entries })
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_FIXTURE).expect("shipped fixture parses")
    }

    pub fn insert(&mut self, surface: &str, uri: impl Into<String>) {
        self.entries.insert(surface.to_lowercase(), uri.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl RepositoryBackend for FixtureBackend {
    fn lookup(&self, surface: &str) -> Result<Option<String>, RepositoryError> {
        Ok(self.entries.get(&surface.to_lowercase()).cloned())
    }
}

/// Strict surfaces backend failures; Lenient logs them and reports a miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LookupMode {
    Strict,
    #[default]
    Lenient,
}

struct Cached {
    uri: Option<String>,
    stored: Instant,
}

/// Caching front for a backend. Hits and misses are both cached; failures are not.
pub struct RepositoryClient {
    backend: Box<dyn RepositoryBackend>,
    mode: LookupMode,
    ttl: Option<Duration>,
    cache: RwLock<HashMap<String, Cached>>,
    backend_calls: AtomicUsize,
    failures: AtomicUsize,
}

impl std::fmt::Debug for RepositoryClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepositoryClient")
            .field("mode", &self.mode)
            .field("ttl", &self.ttl)
            .field("backend_calls", &self.backend_calls())
            .finish_non_exhaustive()
    }
}

impl RepositoryClient {
    pub fn new(backend: impl RepositoryBackend + 'static, mode: LookupMode) -> Self {
        Self {
            backend: Box::new(backend),
            mode,
            ttl: None,
            cache: RwLock::new(HashMap::new()),
            backend_calls: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
        }
    }

    /// Shipped fixture, which never fails.
    pub fn fixture() -> Self {
        Self::new(FixtureBackend::shipped(), LookupMode::Strict)
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = Some(ttl);
        self
    }

    pub fn mode(&self) -> LookupMode {
        self.mode
    }

    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }

    pub fn clear_cache(&self) {
        self.cache.write().unwrap_or_else(|e| e.into_inner()).clear();
    }

    pub fn lookup(&self, surface: &str) -> Result<Option<String>, RepositoryError> {
        let key = surface.to_lowercase();
        {
            let cache = self.cache.read().unwrap_or_else(|e| e.into_inner());
            if let Some(hit) = cache.get(&key) {
                if self.ttl.is_none_or(|ttl| hit.stored.elapsed() < ttl) {
                    return Ok(hit.uri.clone());
                }
            }
        }
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        match self.backend.lookup(surface) {
            Ok(uri) => {
                let mut cache = self.cache.write().unwrap_or_else(|e| e.into_inner());
                cache.insert(
                    key,
                    Cached {
                        uri: uri.clone(),
                        stored: Instant::now(),
                    },
                );
                Ok(uri)
            }
            Err(e) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                match self.mode {
                    LookupMode::Strict => Err(e),
                    LookupMode::Lenient => {
                        tracing::warn!(surface, error = %e, "repository lookup failed");
                        Ok(None)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Down;
    impl RepositoryBackend for Down {
        fn lookup(&self, _: &str) -> Result<Option<String>, RepositoryError> {
            Err(RepositoryError::Unavailable("connection refused".into()))
        }
    }

    #[test]
    fn caches_hits_and_misses_case_insensitively() {
        let c = RepositoryClient::fixture();
        assert_eq!(c.lookup("Rome").unwrap().as_deref(), Some("repo:/resource/Rome"));
        assert_eq!(c.lookup("ROME").unwrap().as_deref(), Some("repo:/resource/Rome"));
        assert_eq!(c.lookup("Atlantis").unwrap(), None);
        assert_eq!(c.lookup("atlantis").unwrap(), None);
        assert_eq!(c.backend_calls(), 2);
    }

    #[test]
    fn modes() {
        let strict = RepositoryClient::new(Down, LookupMode::Strict);
        assert!(strict.lookup("Rome").is_err());
        let lenient = RepositoryClient::new(Down, LookupMode::Lenient);
        assert_eq!(lenient.lookup("Rome").unwrap(), None);
        assert_eq!(lenient.lookup("Rome").unwrap(), None);
        assert_eq!(lenient.backend_calls(), 2);
        assert_eq!(lenient.failures(), 2);
    }

    #[test]
    fn ttl_expiry_refetches() {
        let c = RepositoryClient::fixture().with_ttl(Duration::ZERO);
        c.lookup("Rome").unwrap();
        c.lookup("Rome").unwrap();
        assert_eq!(c.backend_calls(), 2);
    }

    #[test]
    fn malformed_fixture() {
        assert!(matches!(
            FixtureBackend::parse("# ok\nRome repo:/x\n"),
            Err(KnowledgeError::Parse { line: 2, .. })
        ));
    }
}
