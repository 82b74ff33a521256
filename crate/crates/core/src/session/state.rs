//! Materialized session state and the event fold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::access::Role;
use super::config::{PrivacyLevel, SessionConfig};
use super::event::{Event, EventKind};
use super::ids::{MessageId, Millis, NoteId, SessionId, TableId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TablePhase {
    Idle,
    Open,
    Closed,
}

/// Opaque pointer to the external video conference of a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConferenceHandle {
    pub external_url: String,
    pub audience: PrivacyLevel,
}

/// Whether a chat message was typed in the room or by someone connected remotely.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    #[default]
    Local,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteMove {
    pub at: Millis,
    pub from: String,
    pub to: String,
    pub actor: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostIt {
    pub id: NoteId,
    pub author: UserId,
    pub text: String,
    pub area: String,
    pub created_at: Millis,
    pub moved_history: Vec<NoteMove>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blackboard {
    pub areas: Vec<String>,
    pub notes: BTreeMap<NoteId, PostIt>,
}

impl Blackboard {
    pub fn has_area(&self, area: &str) -> bool {
        self.areas.iter().any(|a| a == area)
    }

    /// Notes currently in `area`, oldest first.
    pub fn notes_in<'a>(&'a self, area: &'a str) -> impl Iterator<Item = &'a PostIt> + 'a {
        let mut notes: Vec<_> = self.notes.values().filter(move |n| n.area == area).collect();
        notes.sort_by_key(|n| n.created_at);
        notes.into_iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub id: MessageId,
    pub author: UserId,
    pub text: String,
    pub emoticon: Option<String>,
    pub at: Millis,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableState {
    pub id: TableId,
    pub phase: TablePhase,
    pub chair: Option<UserId>,
    pub conference: Option<ConferenceHandle>,
    /// Every conference url the table has used, in opening order.
    pub conference_log: Vec<String>,
    pub blackboard: Blackboard,
    pub chat: Vec<ChatMessage>,
    pub turn_queue: Vec<UserId>,
    pub speaker: Option<UserId>,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallEntry {
    pub note: NoteId,
    pub table: TableId,
    pub promoted_by: UserId,
    pub at: Millis,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wall {
    pub entries: Vec<WallEntry>,
}

impl Wall {
    pub fn contains(&self, note: &NoteId) -> bool {
        self.entries.iter().any(|e| &e.note == note)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub role: Role,
    /// Table of the user's cohort. Kept while spectating so a returning
    /// participant re-enters wherever the cohort has rotated to.
    pub home: Option<TableId>,
}

/// Full state of one World Cafe event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: SessionId,
    pub config: SessionConfig,
    pub organizer: UserId,
    pub tables: Vec<TableState>,
    pub members: BTreeMap<UserId, Membership>,
    pub wall: Wall,
    pub last_seq: u64,
    pub last_at: Millis,
    pub archived_at: Option<Millis>,
    pub(crate) note_tables: BTreeMap<NoteId, TableId>,
}

/// Why an event could not be folded into a state.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FoldError {
    #[error("expected seq {expected}, found {found}")]
    Gap { expected: u64, found: u64 },
    #[error("{0}")]
    Inconsistent(String),
}

fn inconsistent<T>(msg: impl Into<String>) -> Result<T, FoldError> {
    Err(FoldError::Inconsistent(msg.into()))
}

impl SessionState {
    /// Builds the initial state from a `SessionCreated` event.
    pub fn from_created(event: &Event) -> Result<Self, FoldError> {
        let EventKind::SessionCreated {
            session,
            config,
            organizer,
        } = &event.kind
        else {
            return inconsistent("log does not start with SessionCreated");
        };
        if event.seq != 1 {
            return Err(FoldError::Gap {
                expected: 1,
                found: event.seq,
            });
        }
        if let Err(e) = config.validate() {
            return inconsistent(format!("invalid config: {e}"));
        }
        let tables = config
            .areas
            .iter()
            .enumerate()
            .map(|(i, areas)| TableState {
                id: i as TableId,
                phase: TablePhase::Idle,
                chair: None,
                conference: None,
                conference_log: Vec::new(),
                blackboard: Blackboard {
                    areas: areas.clone(),
                    notes: BTreeMap::new(),
                },
                chat: Vec::new(),
                turn_queue: Vec::new(),
                speaker: None,
                round: 0,
            })
            .collect();
        let mut members = BTreeMap::new();
        members.insert(
            organizer.clone(),
            Membership {
                role: Role::Organizer,
                home: None,
            },
        );
        Ok(Self {
            id: session.clone(),
            config: config.clone(),
            organizer: organizer.clone(),
            tables,
            members,
            wall: Wall::default(),
            last_seq: 1,
            last_at: event.at,
            archived_at: None,
            note_tables: BTreeMap::new(),
        })
    }

    pub fn is_archived(&self) -> bool {
        self.archived_at.is_some()
    }

    pub fn role_of(&self, user: &UserId) -> Option<Role> {
        self.members.get(user).map(|m| m.role)
    }

    pub fn table(&self, id: TableId) -> Option<&TableState> {
        self.tables.get(id as usize)
    }

    pub fn open_tables(&self) -> Vec<TableId> {
        self.tables
            .iter()
            .filter(|t| t.phase == TablePhase::Open)
            .map(|t| t.id)
            .collect()
    }

    pub fn participants_at(&self, table: TableId) -> Vec<&UserId> {
        self.members
            .iter()
            .filter(|(_, m)| m.role == Role::Participant(table))
            .map(|(u, _)| u)
            .collect()
    }

    pub fn note(&self, id: &NoteId) -> Option<&PostIt> {
        let table = self.note_tables.get(id)?;
        self.tables[*table as usize].blackboard.notes.get(id)
    }

    pub fn note_table(&self, id: &NoteId) -> Option<TableId> {
        self.note_tables.get(id).copied()
    }

    pub fn note_count(&self) -> usize {
        self.note_tables.len()
    }

    fn table_mut(&mut self, id: TableId) -> Result<&mut TableState, FoldError> {
        match self.tables.get_mut(id as usize) {
            Some(t) => Ok(t),
            None => inconsistent(format!("unknown table {id}")),
        }
    }

    fn check_table(&self, id: TableId) -> Result<&TableState, FoldError> {
        match self.tables.get(id as usize) {
            Some(t) => Ok(t),
            None => inconsistent(format!("unknown table {id}")),
        }
    }

    fn member(&self, user: &UserId) -> Result<Membership, FoldError> {
        match self.members.get(user) {
            Some(m) => Ok(*m),
            None => inconsistent(format!("unknown member {user}")),
        }
    }

    fn seat(&mut self, user: &UserId, role: Role) {
        let home = match role {
            Role::Participant(t) | Role::TableChair(t) => Some(t),
            _ => self.members.get(user).and_then(|m| m.home),
        };
        self.members.insert(user.clone(), Membership { role, home });
    }

    /// Folds one event into the state. All consistency checks run before any
    /// mutation, so on error the state is unchanged.
    pub fn evolve(&mut self, event: &Event) -> Result<(), FoldError> {
        if self.is_archived() {
            return inconsistent("event after SessionArchived");
        }
        if event.seq != self.last_seq + 1 {
            return Err(FoldError::Gap {
                expected: self.last_seq + 1,
                found: event.seq,
            });
        }
        match &event.kind {
            EventKind::SessionCreated { .. } => {
                return inconsistent("SessionCreated may only appear once");
            }
            EventKind::ChairAssigned {
                table,
                user,
                previous,
            } => {
                let current = self.check_table(*table)?.chair.clone();
                if &current != previous {
                    return inconsistent(format!("table {table} chair mismatch"));
                }
                let membership = self.member(user)?;
                if membership.role == Role::Organizer {
                    return inconsistent("organizer cannot chair a table");
                }
                if let Role::TableChair(old) = membership.role {
                    self.table_mut(old)?.chair = None;
                }
                if let Some(prev) = previous {
                    self.seat(prev, Role::Participant(*table));
                }
                self.seat(user, Role::TableChair(*table));
                self.table_mut(*table)?.chair = Some(user.clone());
            }
            EventKind::TableOpened { table, conference } => {
                let t = self.check_table(*table)?;
                if t.phase == TablePhase::Open || t.chair.is_none() {
                    return inconsistent(format!("table {table} cannot open"));
                }
                let t = self.table_mut(*table)?;
                t.phase = TablePhase::Open;
                t.conference = Some(conference.clone());
                t.conference_log.push(conference.external_url.clone());
            }
            EventKind::Joined { user, role } => {
                if self.members.contains_key(user) {
                    return inconsistent(format!("{user} already joined"));
                }
                if let Some(t) = role.table() {
                    self.check_table(t)?;
                }
                self.seat(user, *role);
            }
            EventKind::RoleChanged { user, from, to } => {
                let membership = self.member(user)?;
                if membership.role != *from {
                    return inconsistent(format!("{user} role mismatch"));
                }
                if let Some(t) = to.table() {
                    self.check_table(t)?;
                }
                if let Role::TableChair(old) = from {
                    self.table_mut(*old)?.chair = None;
                }
                if let Some(t) = from.table() {
                    let table = self.table_mut(t)?;
                    table.turn_queue.retain(|u| u != user);
                }
                self.seat(user, *to);
            }
            EventKind::AudienceSet { table, audience } => {
                let t = self.table_mut(*table)?;
                match t.conference.as_mut() {
                    Some(c) => c.audience = audience.clone(),
                    None => return inconsistent(format!("table {table} has no conference")),
                }
            }
            EventKind::NotePosted {
                table,
                note,
                area,
                text,
            } => {
                if self.note_tables.contains_key(note) {
                    return inconsistent(format!("duplicate note id {note}"));
                }
                if !self.check_table(*table)?.blackboard.has_area(area) {
                    return inconsistent(format!("unknown area {area}"));
                }
                self.table_mut(*table)?.blackboard.notes.insert(
                    note.clone(),
                    PostIt {
                        id: note.clone(),
                        author: event.actor.clone(),
                        text: text.clone(),
                        area: area.clone(),
                        created_at: event.at,
                        moved_history: Vec::new(),
                    },
                );
                self.note_tables.insert(note.clone(), *table);
            }
            EventKind::NoteMoved {
                table,
                note,
                from,
                to,
            } => {
                let board = &self.check_table(*table)?.blackboard;
                match board.notes.get(note) {
                    Some(n) if &n.area == from => {}
                    _ => return inconsistent(format!("note {note} not in area {from}")),
                }
                if !board.has_area(to) {
                    return inconsistent(format!("unknown area {to}"));
                }
                let t = self.table_mut(*table)?;
                let n = t.blackboard.notes.get_mut(note).expect("checked above");
                n.area = to.clone();
                n.moved_history.push(super::state::NoteMove {
                    at: event.at,
                    from: from.clone(),
                    to: to.clone(),
                    actor: event.actor.clone(),
                });
            }
            EventKind::ChatPosted {
                table,
                message,
                text,
                emoticon,
                origin,
            } => {
                self.table_mut(*table)?.chat.push(ChatMessage {
                    id: message.clone(),
                    author: event.actor.clone(),
                    text: text.clone(),
                    emoticon: emoticon.clone(),
                    at: event.at,
                    origin: *origin,
                });
            }
            EventKind::TurnRequested { table, user } => {
                let t = self.table_mut(*table)?;
                if t.turn_queue.contains(user) {
                    return inconsistent(format!("{user} already queued"));
                }
                t.turn_queue.push(user.clone());
            }
            EventKind::TurnGranted { table, user } => {
                let t = self.table_mut(*table)?;
                if t.turn_queue.first() != Some(user) {
                    return inconsistent(format!("{user} is not first in the turn queue"));
                }
                t.turn_queue.remove(0);
                t.speaker = Some(user.clone());
            }
            EventKind::NotePromoted { table, note } => {
                if self.note_tables.get(note) != Some(table) {
                    return inconsistent(format!("note {note} is not on table {table}"));
                }
                if self.wall.contains(note) {
                    return inconsistent(format!("note {note} already on the wall"));
                }
                self.wall.entries.push(WallEntry {
                    note: note.clone(),
                    table: *table,
                    promoted_by: event.actor.clone(),
                    at: event.at,
                });
            }
            EventKind::Rotated { permutation, moves } => {
                for (from, to) in permutation {
                    self.check_table(*from)?;
                    self.check_table(*to)?;
                }
                for mv in moves {
                    let m = self.member(&mv.user)?;
                    let seated_ok = match m.role {
                        Role::Participant(t) => t == mv.from,
                        Role::Public => m.home == Some(mv.from),
                        _ => false,
                    };
                    if !seated_ok {
                        return inconsistent(format!("{} is not seated at {}", mv.user, mv.from));
                    }
                }
                for mv in moves {
                    let m = self.members.get_mut(&mv.user).expect("checked above");
                    if let Role::Participant(_) = m.role {
                        m.role = Role::Participant(mv.to);
                    }
                    m.home = Some(mv.to);
                    if mv.from != mv.to {
                        let old = &mut self.tables[mv.from as usize];
                        old.turn_queue.retain(|u| u != &mv.user);
                        if old.speaker.as_ref() == Some(&mv.user) {
                            old.speaker = None;
                        }
                    }
                }
                for (from, _) in permutation {
                    self.tables[*from as usize].round += 1;
                }
            }
            EventKind::TableClosed { table } => {
                let t = self.table_mut(*table)?;
                if t.phase != TablePhase::Open {
                    return inconsistent(format!("table {table} is not open"));
                }
                t.phase = TablePhase::Closed;
                t.turn_queue.clear();
                t.speaker = None;
            }
            EventKind::SessionArchived {} => {
                if let Some(open) = self.tables.iter().find(|t| t.phase == TablePhase::Open) {
                    return inconsistent(format!("table {} still open", open.id));
                }
                self.archived_at = Some(event.at);
            }
        }
        self.last_seq = event.seq;
        self.last_at = event.at;
        Ok(())
    }
}
