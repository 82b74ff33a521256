use std::collections::BTreeMap;
use std::sync::Arc;

use scicafe_core::session::UserId;

use crate::config::AuthConfig;

/// Maps a bearer token to the user it identifies.
pub trait Authenticator: Send + Sync {
    fn resolve(&self, token: &str) -> Option<UserId>;
}

#[derive(Debug, Clone, Default)]
pub struct StaticTokens {
    tokens: BTreeMap<String, UserId>,
}

impl StaticTokens {
    pub fn new<T: Into<String>, U: Into<String>>(pairs: impl IntoIterator<Item = (T, U)>) -> Self {
        Self {
            tokens: pairs
                .into_iter()
                .map(|(t, u)| (t.into(), UserId::new(u)))
                .collect(),
        }
    }
}

impl Authenticator for StaticTokens {
    fn resolve(&self, token: &str) -> Option<UserId> {
        self.tokens.get(token).cloned()
    }
}

/// Development mode: the token is the user id.
#[derive(Debug, Clone, Copy, Default)]
pub struct DevTokens;

impl Authenticator for DevTokens {
    fn resolve(&self, token: &str) -> Option<UserId> {
        let token = token.trim();
        let ok = !token.is_empty()
            && token.len() <= 64
            && token
                .chars()
                .all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.' | '@'));
        let user = UserId::new(token);
        (ok && !user.is_system()).then_some(user)
    }
}

struct Chain(Vec<Box<dyn Authenticator>>);

impl Authenticator for Chain {
    fn resolve(&self, token: &str) -> Option<UserId> {
        self.0.iter().find_map(|a| a.resolve(token))
    }
}

/// Configured tokens first, then dev mode if enabled.
pub fn from_config(cfg: &AuthConfig) -> Arc<dyn Authenticator> {
    let mut chain: Vec<Box<dyn Authenticator>> =
        vec![Box::new(StaticTokens::new(cfg.tokens.clone()))];
    if cfg.dev_mode {
        chain.push(Box::new(DevTokens));
    }
    Arc::new(Chain(chain))
}
