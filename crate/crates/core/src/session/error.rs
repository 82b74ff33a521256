use thiserror::Error;

use super::config::ConfigError;
use super::ids::{Millis, NoteId, TableId, UserId};
use super::state::FoldError;

/// Rejection of a command by the session state machine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("invalid config: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("unauthorized: {reason}")]
    Unauthorized { reason: String },
    #[error("unknown table {0}")]
    UnknownTable(TableId),
    #[error("table {0} is not open")]
    TableNotOpen(TableId),
    #[error("unknown note {0}")]
    UnknownNote(NoteId),
    #[error("table {table} has no area \"{area}\"")]
    UnknownArea { table: TableId, area: String },
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("invalid note: {0}")]
    InvalidNote(String),
    #[error("invalid chat message: {0}")]
    InvalidMessage(String),
    #[error("emoticon \"{0}\" is not in the palette")]
    InvalidEmoticon(String),
    #[error("table {0} is full")]
    CapacityReached(TableId),
    #[error("no table is open")]
    NoOpenTables,
    #[error("tables still open: {0:?}")]
    TablesStillOpen(Vec<TableId>),
    #[error("session is archived")]
    SessionArchived,
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("clock skew: now {now} is before {created_at}")]
    ClockSkew { now: Millis, created_at: Millis },
}

impl CoreError {
    /// Variant name, as used in simulation scripts.
    pub fn name(&self) -> &'static str {
        match self {
            CoreError::InvalidConfig(_) => "InvalidConfig",
            CoreError::Unauthorized { .. } => "Unauthorized",
            CoreError::UnknownTable(_) => "UnknownTable",
            CoreError::TableNotOpen(_) => "TableNotOpen",
            CoreError::UnknownNote(_) => "UnknownNote",
            CoreError::UnknownArea { .. } => "UnknownArea",
            CoreError::UnknownUser(_) => "UnknownUser",
            CoreError::InvalidNote(_) => "InvalidNote",
            CoreError::InvalidMessage(_) => "InvalidMessage",
            CoreError::InvalidEmoticon(_) => "InvalidEmoticon",
            CoreError::CapacityReached(_) => "CapacityReached",
            CoreError::NoOpenTables => "NoOpenTables",
            CoreError::TablesStillOpen(_) => "TablesStillOpen",
            CoreError::SessionArchived => "SessionArchived",
            CoreError::InvariantViolation(_) => "InvariantViolation",
            CoreError::ClockSkew { .. } => "ClockSkew",
        }
    }

    /// Upper snake case code used in wire error frames.
    pub fn code(&self) -> String {
        let mut code = String::new();
        for (i, c) in self.name().chars().enumerate() {
            if c.is_ascii_uppercase() && i > 0 {
                code.push('_');
            }
            code.push(c.to_ascii_uppercase());
        }
        code
    }

    pub(crate) fn violation(msg: impl Into<String>) -> Self {
        CoreError::InvariantViolation(msg.into())
    }
}

impl From<FoldError> for CoreError {
    fn from(e: FoldError) -> Self {
        CoreError::InvariantViolation(e.to_string())
    }
}

/// Failure to rebuild a state from a log.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("log does not start with SessionCreated")]
    MissingSessionCreated,
    #[error("gap in sequence: expected {expected}, found {found}")]
    GapInSequence { expected: u64, found: u64 },
    #[error("corrupt event {seq}: {reason}")]
    CorruptEvent { seq: u64, reason: String },
    #[error("event {seq} was not permitted for {actor}: {reason}")]
    PermissionViolation {
        seq: u64,
        actor: UserId,
        reason: String,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(
            CoreError::Unauthorized { reason: "x".into() }.code(),
            "UNAUTHORIZED"
        );
        assert_eq!(CoreError::TablesStillOpen(vec![1]).code(), "TABLES_STILL_OPEN");
    }
}
