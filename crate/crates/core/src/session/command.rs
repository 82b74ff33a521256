use serde::{Deserialize, Serialize};

use super::access::{CommandKind, Role};
use super::config::PrivacyLevel;
use super::ids::{NoteId, TableId, UserId};
use super::state::Origin;

/// A request to change a session. Serialized as `{"type": ..., "payload": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum Command {
    /// Enter the session, seated at `table` or as public.
    Join {
        #[serde(default)]
        table: Option<TableId>,
    },
    AssignChair {
        table: TableId,
        user: UserId,
    },
    /// Organizer reseats a user as participant or spectator.
    ChangeRole {
        user: UserId,
        role: Role,
    },
    OpenTable {
        table: TableId,
        conference_url: String,
    },
    CloseTable {
        table: TableId,
    },
    SetAudience {
        table: TableId,
        audience: PrivacyLevel,
    },
    PostNote {
        table: TableId,
        area: String,
        text: String,
    },
    MoveNote {
        table: TableId,
        note: NoteId,
        to_area: String,
    },
    PostChat {
        table: TableId,
        text: String,
        #[serde(default)]
        emoticon: Option<String>,
        #[serde(default)]
        origin: Origin,
    },
    RequestTurn {
        table: TableId,
    },
    /// Gives the floor to the head of the turn queue.
    GrantTurn {
        table: TableId,
    },
    PromoteNote {
        table: TableId,
        note: NoteId,
    },
    SwitchToPublic {},
    Rejoin {
        #[serde(default)]
        table: Option<TableId>,
    },
    ForceRotate {},
    /// Timer-driven rotation, issued by the `system` actor.
    Rotate {},
    Archive {},
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Join { .. } => CommandKind::Join,
            Command::AssignChair { .. } => CommandKind::AssignChair,
            Command::ChangeRole { .. } => CommandKind::ChangeRole,
            Command::OpenTable { .. } => CommandKind::OpenTable,
            Command::CloseTable { .. } => CommandKind::CloseTable,
            Command::SetAudience { .. } => CommandKind::SetAudience,
            Command::PostNote { .. } => CommandKind::PostNote,
            Command::MoveNote { .. } => CommandKind::MoveNote,
            Command::PostChat { .. } => CommandKind::PostChat,
            Command::RequestTurn { .. } => CommandKind::RequestTurn,
            Command::GrantTurn { .. } => CommandKind::GrantTurn,
            Command::PromoteNote { .. } => CommandKind::PromoteNote,
            Command::SwitchToPublic {} => CommandKind::SwitchToPublic,
            Command::Rejoin { .. } => CommandKind::Rejoin,
            Command::ForceRotate {} => CommandKind::ForceRotate,
            Command::Rotate {} => CommandKind::Rotate,
            Command::Archive {} => CommandKind::Archive,
        }
    }

    /// The table the permission check is scoped to.
    pub fn table(&self) -> Option<TableId> {
        match self {
            Command::AssignChair { table, .. }
            | Command::OpenTable { table, .. }
            | Command::CloseTable { table }
            | Command::SetAudience { table, .. }
            | Command::PostNote { table, .. }
            | Command::MoveNote { table, .. }
            | Command::PostChat { table, .. }
            | Command::RequestTurn { table }
            | Command::GrantTurn { table }
            | Command::PromoteNote { table, .. } => Some(*table),
            Command::Join { table } | Command::Rejoin { table } => *table,
            Command::ChangeRole { role, .. } => role.table(),
            Command::SwitchToPublic {}
            | Command::ForceRotate {}
            | Command::Rotate {}
            | Command::Archive {} => None,
        }
    }
}
