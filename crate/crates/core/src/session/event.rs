use serde::{Deserialize, Serialize};

use super::access::Role;
use super::config::{PrivacyLevel, SessionConfig};
use super::ids::{MessageId, Millis, NoteId, SessionId, TableId, UserId};
use super::state::{ConferenceHandle, Origin};

/// One immutable fact in a session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: Millis,
    pub actor: UserId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatMove {
    pub user: UserId,
    pub from: TableId,
    pub to: TableId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    SessionCreated {
        session: SessionId,
        config: SessionConfig,
        organizer: UserId,
    },
    ChairAssigned {
        table: TableId,
        user: UserId,
        previous: Option<UserId>,
    },
    TableOpened {
        table: TableId,
        conference: ConferenceHandle,
    },
    Joined {
        user: UserId,
        role: Role,
    },
    RoleChanged {
        user: UserId,
        from: Role,
        to: Role,
    },
    AudienceSet {
        table: TableId,
        audience: PrivacyLevel,
    },
    NotePosted {
        table: TableId,
        note: NoteId,
        area: String,
        text: String,
    },
    NoteMoved {
        table: TableId,
        note: NoteId,
        from: String,
        to: String,
    },
    ChatPosted {
        table: TableId,
        message: MessageId,
        text: String,
        emoticon: Option<String>,
        origin: Origin,
    },
    TurnRequested {
        table: TableId,
        user: UserId,
    },
    TurnGranted {
        table: TableId,
        user: UserId,
    },
    NotePromoted {
        table: TableId,
        note: NoteId,
    },
    /// `permutation` maps each open table to the table its cohort moves to.
    Rotated {
        permutation: Vec<(TableId, TableId)>,
        moves: Vec<SeatMove>,
    },
    TableClosed {
        table: TableId,
    },
    SessionArchived {},
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionCreated { .. } => "SessionCreated",
            EventKind::ChairAssigned { .. } => "ChairAssigned",
            EventKind::TableOpened { .. } => "TableOpened",
            EventKind::Joined { .. } => "Joined",
            EventKind::RoleChanged { .. } => "RoleChanged",
            EventKind::AudienceSet { .. } => "AudienceSet",
            EventKind::NotePosted { .. } => "NotePosted",
            EventKind::NoteMoved { .. } => "NoteMoved",
            EventKind::ChatPosted { .. } => "ChatPosted",
            EventKind::TurnRequested { .. } => "TurnRequested",
            EventKind::TurnGranted { .. } => "TurnGranted",
            EventKind::NotePromoted { .. } => "NotePromoted",
            EventKind::Rotated { .. } => "Rotated",
            EventKind::TableClosed { .. } => "TableClosed",
            EventKind::SessionArchived {} => "SessionArchived",
        }
    }
}
