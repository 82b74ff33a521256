use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::{TableId, UserId};

/// Name of the catch-all area every blackboard starts with.
pub const UNSORTED_AREA: &str = "unsorted";

pub const DEFAULT_ROTATION_MINUTES: u32 = 20;
pub const DEFAULT_RECENCY_SECONDS: u64 = 300;
pub const DEFAULT_AREAS: [&str; 3] = [UNSORTED_AREA, "ideas", "agreed"];
pub const DEFAULT_EMOTICONS: [&str; 8] = [
    "smile",
    "laugh",
    "sad",
    "surprised",
    "thumbs_up",
    "thumbs_down",
    "heart",
    "thinking",
];

/// Who may follow a session or a table recording.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum PrivacyLevel {
    #[default]
    Public,
    Restricted { group: BTreeSet<UserId> },
}

impl PrivacyLevel {
    pub fn restricted<I, U>(members: I) -> Self
    where
        I: IntoIterator<Item = U>,
        U: Into<UserId>,
    {
        PrivacyLevel::Restricted {
            group: members.into_iter().map(Into::into).collect(),
        }
    }

    pub fn admits(&self, user: &UserId) -> bool {
        match self {
            PrivacyLevel::Public => true,
            PrivacyLevel::Restricted { group } => group.contains(user),
        }
    }

    /// True when `self` admits nobody that `outer` would refuse.
    pub fn is_within(&self, outer: &PrivacyLevel) -> bool {
        match (self, outer) {
            (_, PrivacyLevel::Public) => true,
            (PrivacyLevel::Public, PrivacyLevel::Restricted { .. }) => false,
            (PrivacyLevel::Restricted { group: inner }, PrivacyLevel::Restricted { group: outer }) => {
                inner.is_subset(outer)
            }
        }
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        match self {
            PrivacyLevel::Public => true,
            PrivacyLevel::Restricted { group } => !group.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("session title must not be empty")]
    EmptyTitle,
    #[error("a session needs at least one table")]
    NoTables,
    #[error("area lists given for {given} tables but the session has {expected}")]
    AreaCountMismatch { expected: u32, given: usize },
    #[error("table {0} has no blackboard areas")]
    EmptyAreas(TableId),
    #[error("table {0}: the first area must be \"{UNSORTED_AREA}\"")]
    FirstAreaNotUnsorted(TableId),
    #[error("table {table}: duplicate area \"{area}\"")]
    DuplicateArea { table: TableId, area: String },
    #[error("table {0}: area names must not be empty")]
    BlankArea(TableId),
    #[error("rotation interval must be at least one minute")]
    ZeroRotation,
    #[error("recency threshold must be positive")]
    ZeroRecency,
    #[error("a restricted session needs a non-empty group")]
    EmptyRestrictedGroup,
    #[error("table capacity must be positive when set")]
    ZeroCapacity,
}

/// Organizer-supplied shape of a World Cafe event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub title: String,
    pub table_count: u32,
    #[serde(default = "default_rotation")]
    pub rotation_minutes: u32,
    /// One ordered list of area names per table.
    pub areas: Vec<Vec<String>>,
    #[serde(default)]
    pub privacy: PrivacyLevel,
    #[serde(default = "default_recency")]
    pub recency_threshold_seconds: u64,
    #[serde(default = "default_emoticons")]
    pub emoticons: Vec<String>,
    /// Maximum participants seated at one table, chair excluded.
    #[serde(default)]
    pub table_capacity: Option<u32>,
}

fn default_rotation() -> u32 {
    DEFAULT_ROTATION_MINUTES
}

fn default_recency() -> u64 {
    DEFAULT_RECENCY_SECONDS
}

fn default_emoticons() -> Vec<String> {
    DEFAULT_EMOTICONS.iter().map(|s| s.to_string()).collect()
}

impl SessionConfig {
    /// A config with default rotation, areas, recency and palette.
    pub fn new(title: impl Into<String>, table_count: u32) -> Self {
        let areas = (0..table_count)
            .map(|_| DEFAULT_AREAS.iter().map(|s| s.to_string()).collect())
            .collect();
        Self {
            title: title.into(),
            table_count,
            rotation_minutes: DEFAULT_ROTATION_MINUTES,
            areas,
            privacy: PrivacyLevel::Public,
            recency_threshold_seconds: DEFAULT_RECENCY_SECONDS,
            emoticons: default_emoticons(),
            table_capacity: None,
        }
    }

    /// Use the same area list on every table. `unsorted` is prepended when missing.
    pub fn with_areas<S: AsRef<str>>(mut self, areas: &[S]) -> Self {
        let mut list: Vec<String> = areas.iter().map(|s| s.as_ref().to_owned()).collect();
        if list.first().map(String::as_str) != Some(UNSORTED_AREA) {
            list.insert(0, UNSORTED_AREA.to_owned());
        }
        self.areas = (0..self.table_count).map(|_| list.clone()).collect();
        self
    }

    pub fn with_rotation_minutes(mut self, minutes: u32) -> Self {
        self.rotation_minutes = minutes;
        self
    }

    pub fn with_privacy(mut self, privacy: PrivacyLevel) -> Self {
        self.privacy = privacy;
        self
    }

    pub fn with_capacity(mut self, capacity: u32) -> Self {
        self.table_capacity = Some(capacity);
        self
    }

    pub fn rotation_ms(&self) -> u64 {
        u64::from(self.rotation_minutes) * 60_000
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.title.trim().is_empty() {
            return Err(ConfigError::EmptyTitle);
        }
        if self.table_count == 0 {
            return Err(ConfigError::NoTables);
        }
        if self.areas.len() != self.table_count as usize {
            return Err(ConfigError::AreaCountMismatch {
                expected: self.table_count,
                given: self.areas.len(),
            });
        }
        for (table, areas) in self.areas.iter().enumerate() {
            let table = table as TableId;
            match areas.first() {
                None => return Err(ConfigError::EmptyAreas(table)),
                Some(first) if first != UNSORTED_AREA => {
                    return Err(ConfigError::FirstAreaNotUnsorted(table))
                }
                _ => {}
            }
            let mut seen = BTreeSet::new();
            for area in areas {
                if area.trim().is_empty() {
                    return Err(ConfigError::BlankArea(table));
                }
                if !seen.insert(area.as_str()) {
                    return Err(ConfigError::DuplicateArea {
                        table,
                        area: area.clone(),
                    });
                }
            }
        }
        if self.rotation_minutes == 0 {
            return Err(ConfigError::ZeroRotation);
        }
        if self.recency_threshold_seconds == 0 {
            return Err(ConfigError::ZeroRecency);
        }
        if !self.privacy.is_well_formed() {
            return Err(ConfigError::EmptyRestrictedGroup);
        }
        if self.table_capacity == Some(0) {
            return Err(ConfigError::ZeroCapacity);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_twenty_minute_rotation() {
        let cfg = SessionConfig::new("Energy Futures", 3);
        assert_eq!(cfg.rotation_minutes, 20);
        assert_eq!(cfg.rotation_ms(), 1_200_000);
        assert_eq!(cfg.recency_threshold_seconds, 300);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_broken_configs() {
        assert_eq!(SessionConfig::new("x", 0).validate(), Err(ConfigError::NoTables));
        assert_eq!(SessionConfig::new("  ", 2).validate(), Err(ConfigError::EmptyTitle));

        let mut cfg = SessionConfig::new("x", 2);
        cfg.areas[1] = vec![];
        assert_eq!(cfg.validate(), Err(ConfigError::EmptyAreas(1)));

        let mut cfg = SessionConfig::new("x", 1);
        cfg.areas[0] = vec!["unsorted".into(), "a".into(), "a".into()];
        assert!(matches!(cfg.validate(), Err(ConfigError::DuplicateArea { .. })));

        let mut cfg = SessionConfig::new("x", 1);
        cfg.areas[0] = vec!["ideas".into()];
        assert_eq!(cfg.validate(), Err(ConfigError::FirstAreaNotUnsorted(0)));

        let cfg = SessionConfig::new("x", 1).with_privacy(PrivacyLevel::Restricted {
            group: BTreeSet::new(),
        });
        assert_eq!(cfg.validate(), Err(ConfigError::EmptyRestrictedGroup));
    }

    #[test]
    fn with_areas_prepends_unsorted() {
        let cfg = SessionConfig::new("x", 2).with_areas(&["ideas", "agreed"]);
        assert_eq!(cfg.areas[1], vec!["unsorted", "ideas", "agreed"]);
    }

    #[test]
    fn narrowing() {
        let public = PrivacyLevel::Public;
        let ab = PrivacyLevel::restricted(["a", "b"]);
        let a = PrivacyLevel::restricted(["a"]);
        assert!(ab.is_within(&public));
        assert!(a.is_within(&ab));
        assert!(!ab.is_within(&a));
        assert!(!public.is_within(&ab));
    }
}
