//! Command validation: turns a command into the event it would produce.

use super::access::{authorize, CommandKind, Decision, Role};
use super::command::Command;
use super::config::SessionConfig;
use super::error::CoreError;
use super::event::{Event, EventKind, SeatMove};
use super::ids::{MessageId, Millis, NoteId, SessionId, TableId, UserId};
use super::state::{ConferenceHandle, SessionState, TablePhase};

pub const MAX_NOTE_CHARS: usize = 500;
pub const MAX_CHAT_CHARS: usize = 2000;

/// Validates the config and builds the initial state with its `SessionCreated` event.
pub fn create_session(
    id: SessionId,
    config: SessionConfig,
    organizer: UserId,
    now: Millis,
) -> Result<(SessionState, Event), CoreError> {
    config.validate()?;
    if organizer.is_system() {
        return Err(CoreError::violation("the system actor cannot organize"));
    }
    let event = Event {
        seq: 1,
        at: now,
        actor: organizer.clone(),
        kind: EventKind::SessionCreated {
            session: id,
            config,
            organizer,
        },
    };
    let state = SessionState::from_created(&event)?;
    Ok((state, event))
}

/// Applies a command to a state snapshot, returning the successor state and
/// the events that lead to it.
pub fn apply(
    state: &SessionState,
    command: &Command,
    actor: &UserId,
    now: Millis,
) -> Result<(SessionState, Vec<Event>), CoreError> {
    let mut next = state.clone();
    let events = next.execute(command, actor, now)?;
    Ok((next, events))
}

/// Rotates seated cohorts one open table forward.
pub fn rotate(state: &SessionState, now: Millis) -> Result<(SessionState, Vec<Event>), CoreError> {
    apply(state, &Command::Rotate {}, &UserId::system(), now)
}

impl SessionState {
    /// Permission check for an actor, covering the `system` actor and
    /// not-yet-joined users as well as the role matrix.
    pub fn permits(&self, actor: &UserId, kind: CommandKind, table: Option<TableId>) -> Decision {
        if actor.is_system() {
            return if kind == CommandKind::Rotate {
                Decision::Allow
            } else {
                Decision::Deny("the system actor only rotates tables".into())
            };
        }
        match self.role_of(actor) {
            Some(role) => authorize(&role, kind, table),
            None if kind == CommandKind::Join => Decision::Allow,
            None => Decision::Deny("not a member of this session".into()),
        }
    }

    /// Validates and applies a command in place.
    pub fn execute(
        &mut self,
        command: &Command,
        actor: &UserId,
        now: Millis,
    ) -> Result<Vec<Event>, CoreError> {
        let kind = self.decide(command, actor)?;
        let event = Event {
            seq: self.last_seq + 1,
            at: now,
            actor: actor.clone(),
            kind,
        };
        self.evolve(&event)?;
        Ok(vec![event])
    }

    /// The event a command would produce, without applying it.
    pub fn decide(&self, command: &Command, actor: &UserId) -> Result<EventKind, CoreError> {
        if self.is_archived() {
            return Err(CoreError::SessionArchived);
        }
        if let Some(t) = command.table() {
            self.require_table(t)?;
        }
        if let Decision::Deny(reason) = self.permits(actor, command.kind(), command.table()) {
            return Err(CoreError::Unauthorized { reason });
        }

        match command {
            Command::Join { table } => {
                if !self.config.privacy.admits(actor) {
                    return Err(CoreError::Unauthorized {
                        reason: "not in the authorized audience".into(),
                    });
                }
                if self.members.contains_key(actor) {
                    return Err(CoreError::violation(format!("{actor} is already a member")));
                }
                let role = match table {
                    Some(t) => {
                        self.require_seat(*t)?;
                        Role::Participant(*t)
                    }
                    None => Role::Public,
                };
                Ok(EventKind::Joined {
                    user: actor.clone(),
                    role,
                })
            }
            Command::AssignChair { table, user } => {
                let role = self
                    .role_of(user)
                    .ok_or_else(|| CoreError::UnknownUser(user.clone()))?;
                match role {
                    Role::Organizer => {
                        return Err(CoreError::violation("the organizer cannot chair a table"))
                    }
                    Role::TableChair(t) if t == *table => {
                        return Err(CoreError::violation(format!("{user} already chairs table {t}")))
                    }
                    Role::TableChair(t) if self.tables[t as usize].phase == TablePhase::Open => {
                        return Err(CoreError::violation(format!(
                            "table {t} is open and would lose its chair"
                        )))
                    }
                    _ => {}
                }
                Ok(EventKind::ChairAssigned {
                    table: *table,
                    user: user.clone(),
                    previous: self.tables[*table as usize].chair.clone(),
                })
            }
            Command::ChangeRole { user, role } => {
                let current = self
                    .role_of(user)
                    .ok_or_else(|| CoreError::UnknownUser(user.clone()))?;
                match role {
                    Role::Participant(t) => {
                        self.require_table(*t)?;
                        if current != *role {
                            self.require_seat(*t)?;
                        }
                    }
                    Role::Public => {}
                    Role::Organizer | Role::TableChair(_) => {
                        return Err(CoreError::violation(
                            "use AssignChair for chairs; the organizer is fixed",
                        ))
                    }
                }
                self.require_reseatable(user, current)?;
                if current == *role {
                    return Err(CoreError::violation(format!("{user} already has role {role}")));
                }
                Ok(EventKind::RoleChanged {
                    user: user.clone(),
                    from: current,
                    to: *role,
                })
            }
            Command::OpenTable {
                table,
                conference_url,
            } => {
                let t = &self.tables[*table as usize];
                if t.phase == TablePhase::Open {
                    return Err(CoreError::violation(format!("table {table} is already open")));
                }
                if t.chair.is_none() {
                    return Err(CoreError::violation(format!("table {table} has no chair")));
                }
                if conference_url.trim().is_empty() {
                    return Err(CoreError::violation("conference url must not be empty"));
                }
                Ok(EventKind::TableOpened {
                    table: *table,
                    conference: ConferenceHandle {
                        external_url: conference_url.clone(),
                        audience: self.config.privacy.clone(),
                    },
                })
            }
            Command::CloseTable { table } => {
                self.require_open(*table)?;
                Ok(EventKind::TableClosed { table: *table })
            }
            Command::SetAudience { table, audience } => {
                if self.tables[*table as usize].conference.is_none() {
                    return Err(CoreError::violation(format!(
                        "table {table} has no conference yet"
                    )));
                }
                if !audience.is_well_formed() {
                    return Err(CoreError::violation("restricted audience must not be empty"));
                }
                if !audience.is_within(&self.config.privacy) {
                    return Err(CoreError::violation(
                        "table audience may only narrow the session privacy",
                    ));
                }
                Ok(EventKind::AudienceSet {
                    table: *table,
                    audience: audience.clone(),
                })
            }
            Command::PostNote { table, area, text } => {
                self.require_open(*table)?;
                self.require_area(*table, area)?;
                if text.trim().is_empty() {
                    return Err(CoreError::InvalidNote("text is empty".into()));
                }
                if text.chars().count() > MAX_NOTE_CHARS {
                    return Err(CoreError::InvalidNote(format!(
                        "text exceeds {MAX_NOTE_CHARS} characters"
                    )));
                }
                Ok(EventKind::NotePosted {
                    table: *table,
                    note: NoteId::for_seq(self.last_seq + 1),
                    area: area.clone(),
                    text: text.clone(),
                })
            }
            Command::MoveNote {
                table,
                note,
                to_area,
            } => {
                self.require_open(*table)?;
                let current = self.tables[*table as usize]
                    .blackboard
                    .notes
                    .get(note)
                    .ok_or_else(|| CoreError::UnknownNote(note.clone()))?;
                self.require_area(*table, to_area)?;
                if &current.area == to_area {
                    return Err(CoreError::violation(format!(
                        "note {note} is already in \"{to_area}\""
                    )));
                }
                Ok(EventKind::NoteMoved {
                    table: *table,
                    note: note.clone(),
                    from: current.area.clone(),
                    to: to_area.clone(),
                })
            }
            Command::PostChat {
                table,
                text,
                emoticon,
                origin,
            } => {
                self.require_open(*table)?;
                if text.trim().is_empty() && emoticon.is_none() {
                    return Err(CoreError::InvalidMessage("message is empty".into()));
                }
                if text.chars().count() > MAX_CHAT_CHARS {
                    return Err(CoreError::InvalidMessage(format!(
                        "text exceeds {MAX_CHAT_CHARS} characters"
                    )));
                }
                if let Some(e) = emoticon {
                    if !self.config.emoticons.contains(e) {
                        return Err(CoreError::InvalidEmoticon(e.clone()));
                    }
                }
                Ok(EventKind::ChatPosted {
                    table: *table,
                    message: MessageId::for_seq(self.last_seq + 1),
                    text: text.clone(),
                    emoticon: emoticon.clone(),
                    origin: *origin,
                })
            }
            Command::RequestTurn { table } => {
                self.require_open(*table)?;
                if self.tables[*table as usize].turn_queue.contains(actor) {
                    return Err(CoreError::violation(format!("{actor} is already queued")));
                }
                Ok(EventKind::TurnRequested {
                    table: *table,
                    user: actor.clone(),
                })
            }
            Command::GrantTurn { table } => {
                self.require_open(*table)?;
                let next = self.tables[*table as usize]
                    .turn_queue
                    .first()
                    .ok_or_else(|| CoreError::violation(format!("table {table} turn queue is empty")))?;
                Ok(EventKind::TurnGranted {
                    table: *table,
                    user: next.clone(),
                })
            }
            Command::PromoteNote { table, note } => {
                if self.note_table(note) != Some(*table) {
                    return Err(CoreError::UnknownNote(note.clone()));
                }
                if self.wall.contains(note) {
                    return Err(CoreError::violation(format!("note {note} is already on the wall")));
                }
                Ok(EventKind::NotePromoted {
                    table: *table,
                    note: note.clone(),
                })
            }
            Command::SwitchToPublic {} => {
                let current = self.role_of(actor).expect("permitted actors are members");
                if current == Role::Organizer {
                    return Err(CoreError::violation("the organizer role is fixed"));
                }
                Ok(EventKind::RoleChanged {
                    user: actor.clone(),
                    from: current,
                    to: Role::Public,
                })
            }
            Command::Rejoin { table } => {
                let membership = self.members[actor];
                if membership.role == Role::Organizer {
                    return Err(CoreError::violation("the organizer role is fixed"));
                }
                let target = membership
                    .home
                    .or(*table)
                    .ok_or_else(|| CoreError::violation("no table to return to"))?;
                self.require_seat(target)?;
                Ok(EventKind::RoleChanged {
                    user: actor.clone(),
                    from: membership.role,
                    to: Role::Participant(target),
                })
            }
            Command::ForceRotate {} | Command::Rotate {} => self.rotation_event(),
            Command::Archive {} => {
                let open = self.open_tables();
                if !open.is_empty() {
                    return Err(CoreError::TablesStillOpen(open));
                }
                Ok(EventKind::SessionArchived {})
            }
        }
    }

    /// Round-robin over open tables in ascending id order: the cohort at the
    /// i-th open table moves to the (i+1 mod n)-th. Chairs stay put.
    fn rotation_event(&self) -> Result<EventKind, CoreError> {
        let open = self.open_tables();
        if open.is_empty() {
            return Err(CoreError::NoOpenTables);
        }
        let n = open.len();
        let permutation: Vec<(TableId, TableId)> = open
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, open[(i + 1) % n]))
            .collect();
        let target = |t: TableId| permutation.iter().find(|(from, _)| *from == t).map(|p| p.1);
        let moves = self
            .members
            .iter()
            .filter_map(|(user, m)| {
                let from = match m.role {
                    Role::Participant(t) => t,
                    Role::Public => m.home?,
                    Role::Organizer | Role::TableChair(_) => return None,
                };
                target(from).map(|to| SeatMove {
                    user: user.clone(),
                    from,
                    to,
                })
            })
            .collect();
        Ok(EventKind::Rotated { permutation, moves })
    }

    fn require_table(&self, table: TableId) -> Result<(), CoreError> {
        if (table as usize) < self.tables.len() {
            Ok(())
        } else {
            Err(CoreError::UnknownTable(table))
        }
    }

    fn require_open(&self, table: TableId) -> Result<(), CoreError> {
        if self.tables[table as usize].phase == TablePhase::Open {
            Ok(())
        } else {
            Err(CoreError::TableNotOpen(table))
        }
    }

    fn require_area(&self, table: TableId, area: &str) -> Result<(), CoreError> {
        if self.tables[table as usize].blackboard.has_area(area) {
            Ok(())
        } else {
            Err(CoreError::UnknownArea {
                table,
                area: area.to_owned(),
            })
        }
    }

    fn require_seat(&self, table: TableId) -> Result<(), CoreError> {
        self.require_table(table)?;
        match self.config.table_capacity {
            Some(cap) if self.participants_at(table).len() >= cap as usize => {
                Err(CoreError::CapacityReached(table))
            }
            _ => Ok(()),
        }
    }

    fn require_reseatable(&self, user: &UserId, current: Role) -> Result<(), CoreError> {
        match current {
            Role::Organizer => Err(CoreError::violation("the organizer role is fixed")),
            Role::TableChair(t) if self.tables[t as usize].phase == TablePhase::Open => Err(
                CoreError::violation(format!("{user} chairs open table {t}")),
            ),
            _ => Ok(()),
        }
    }
}
