use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_ENV: &str = "SCICAFE_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("environment {var}: {reason}")]
    Env { var: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RepoMode {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RepositoryConfig {
    /// Live lookup endpoint; takes precedence over the fixture.
    pub endpoint: Option<String>,
    /// TSV fixture; the shipped one when neither is set.
    pub fixture: Option<PathBuf>,
    pub mode: RepoMode,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuthConfig {
    /// Accept any bearer token as the user id it spells.
    pub dev_mode: bool,
    /// token -> user id
    pub tokens: BTreeMap<String, String>,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            dev_mode: true,
            tokens: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// HTTP and WebSocket listener.
    pub listen: String,
    /// Raw line-protocol listener; disabled when absent.
    pub line_listen: Option<String>,
    pub storage_dir: PathBuf,
    pub snapshot_interval: u64,
    pub rotation_tick_ms: u64,
    pub repository: RepositoryConfig,
    pub auth: AuthConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:7878".into(),
            line_listen: None,
            storage_dir: PathBuf::from("scicafe-data"),
            snapshot_interval: 1000,
            rotation_tick_ms: 1000,
            repository: RepositoryConfig::default(),
            auth: AuthConfig::default(),
        }
    }
}

fn number(var: &str, value: &str) -> Result<u64, ConfigError> {
    value.parse().map_err(|_| ConfigError::Env {
        var: var.into(),
        reason: format!("expected an integer, got {value:?}"),
    })
}

impl ServiceConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_owned(),
            source,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Applies `SCICAFE_*` overrides from the given variables.
    pub fn with_env<I, K, V>(mut self, vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let (k, v) = (k.as_ref(), v.as_ref());
            match k {
                "SCICAFE_LISTEN" => self.listen = v.into(),
                "SCICAFE_LINE_LISTEN" => self.line_listen = Some(v.into()),
                "SCICAFE_STORAGE_DIR" => self.storage_dir = v.into(),
                "SCICAFE_SNAPSHOT_INTERVAL" => self.snapshot_interval = number(k, v)?.max(1),
                "SCICAFE_ROTATION_TICK_MS" => self.rotation_tick_ms = number(k, v)?.max(1),
                "SCICAFE_REPO_ENDPOINT" => self.repository.endpoint = Some(v.into()),
                "SCICAFE_REPO_FIXTURE" => self.repository.fixture = Some(v.into()),
                "SCICAFE_REPO_MODE" => {
                    self.repository.mode = match v {
                        "strict" => RepoMode::Strict,
                        "lenient" => RepoMode::Lenient,
                        _ => {
                            return Err(ConfigError::Env {
                                var: k.into(),
                                reason: "expected strict or lenient".into(),
                            })
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(self)
    }

    /// File named by `SCICAFE_CONFIG` (or `explicit`), then process environment.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let base = match path {
            Some(p) => Self::from_file(&p)?,
            None => Self::default(),
        };
        base.with_env(std::env::vars())
    }
}
