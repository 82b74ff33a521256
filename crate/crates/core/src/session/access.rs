//! Role model and the permission matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ids::TableId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", content = "table")]
pub enum Role {
    Organizer,
    TableChair(TableId),
    Participant(TableId),
    Public,
}

impl Role {
    pub fn table(&self) -> Option<TableId> {
        match self {
            Role::TableChair(t) | Role::Participant(t) => Some(*t),
            Role::Organizer | Role::Public => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Organizer => f.write_str("Organizer"),
            Role::TableChair(t) => write!(f, "TableChair({t})"),
            Role::Participant(t) => write!(f, "Participant({t})"),
            Role::Public => f.write_str("Public"),
        }
    }
}

impl FromStr for Role {
    type Err = String;

    /// Parses the `Display` form, e.g. `Participant(2)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "Organizer" => return Ok(Role::Organizer),
            "Public" => return Ok(Role::Public),
            _ => {}
        }
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("unrecognised role `{s}`"))?;
        let table: TableId = rest
            .strip_suffix(')')
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| format!("bad table index in `{s}`"))?;
        match name {
            "TableChair" => Ok(Role::TableChair(table)),
            "Participant" => Ok(Role::Participant(table)),
            _ => Err(format!("unrecognised role `{s}`")),
        }
    }
}

/// The fixed command vocabulary. The variant names double as wire `type` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommandKind {
    Join,
    AssignChair,
    ChangeRole,
    OpenTable,
    CloseTable,
    SetAudience,
    PostNote,
    MoveNote,
    PostChat,
    RequestTurn,
    GrantTurn,
    PromoteNote,
    SwitchToPublic,
    Rejoin,
    ForceRotate,
    Rotate,
    Archive,
}

impl CommandKind {
    pub const ALL: [CommandKind; 17] = [
        CommandKind::Join,
        CommandKind::AssignChair,
        CommandKind::ChangeRole,
        CommandKind::OpenTable,
        CommandKind::CloseTable,
        CommandKind::SetAudience,
        CommandKind::PostNote,
        CommandKind::MoveNote,
        CommandKind::PostChat,
        CommandKind::RequestTurn,
        CommandKind::GrantTurn,
        CommandKind::PromoteNote,
        CommandKind::SwitchToPublic,
        CommandKind::Rejoin,
        CommandKind::ForceRotate,
        CommandKind::Rotate,
        CommandKind::Archive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Join => "Join",
            CommandKind::AssignChair => "AssignChair",
            CommandKind::ChangeRole => "ChangeRole",
            CommandKind::OpenTable => "OpenTable",
            CommandKind::CloseTable => "CloseTable",
            CommandKind::SetAudience => "SetAudience",
            CommandKind::PostNote => "PostNote",
            CommandKind::MoveNote => "MoveNote",
            CommandKind::PostChat => "PostChat",
            CommandKind::RequestTurn => "RequestTurn",
            CommandKind::GrantTurn => "GrantTurn",
            CommandKind::PromoteNote => "PromoteNote",
            CommandKind::SwitchToPublic => "SwitchToPublic",
            CommandKind::Rejoin => "Rejoin",
            CommandKind::ForceRotate => "ForceRotate",
            CommandKind::Rotate => "Rotate",
            CommandKind::Archive => "Archive",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Commands that change nothing but the actor's own seat.
    fn is_self_service(self) -> bool {
        matches!(self, CommandKind::SwitchToPublic | CommandKind::Rejoin)
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Allow,
    Deny(String),
}

impl Decision {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Decision::Allow)
    }
}

/// The permission matrix. `table` is the table the command targets, if any.
///
/// Organizers may issue everything. Chairs run their own table; participants
/// contribute at their own table and may step out to spectate; the public
/// only watches and may step back in.
pub fn authorize(role: &Role, kind: CommandKind, table: Option<TableId>) -> Decision {
    use CommandKind::*;

    let at_own_table = |own: TableId| table == Some(own);
    match *role {
        Role::Organizer => Decision::Allow,
        Role::TableChair(own) => match kind {
            OpenTable | CloseTable | SetAudience | GrantTurn | PromoteNote | PostNote
            | MoveNote | PostChat
                if at_own_table(own) =>
            {
                Decision::Allow
            }
            OpenTable | CloseTable | SetAudience | GrantTurn | PromoteNote | PostNote
            | MoveNote | PostChat => Decision::Deny(format!("chair of table {own} only")),
            SwitchToPublic => Decision::Deny("chairs stay with their table".into()),
            _ => Decision::Deny("organizer only".into()),
        },
        Role::Participant(own) => match kind {
            PostNote | MoveNote | PostChat | RequestTurn if at_own_table(own) => Decision::Allow,
            PostNote | MoveNote | PostChat | RequestTurn => {
                Decision::Deny(format!("participant of table {own} only"))
            }
            SwitchToPublic => Decision::Allow,
            Join | Rejoin => Decision::Deny("already seated".into()),
            _ => Decision::Deny("not permitted for participants".into()),
        },
        Role::Public => match kind {
            Rejoin => Decision::Allow,
            k if k.is_self_service() => Decision::Deny("already spectating".into()),
            Join => Decision::Deny("already joined".into()),
            _ => Decision::Deny("spectator".into()),
        },
    }
}
