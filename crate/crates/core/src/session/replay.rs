use super::access::{CommandKind, Decision, Role};
use super::error::ReplayError;
use super::event::{Event, EventKind};
use super::ids::TableId;
use super::state::{FoldError, SessionState};

/// Rebuilds a session from its full log.
pub fn replay(events: &[Event]) -> Result<SessionState, ReplayError> {
    replay_inner(events, false)
}

/// Like [`replay`], but also re-runs the permission check for every event
/// against the actor's role at that point of the log.
pub fn replay_audited(events: &[Event]) -> Result<SessionState, ReplayError> {
    replay_inner(events, true)
}

/// Folds a log tail onto a recovered snapshot.
pub fn replay_onto(state: &mut SessionState, tail: &[Event]) -> Result<(), ReplayError> {
    for event in tail {
        fold_one(state, event)?;
    }
    Ok(())
}

fn replay_inner(events: &[Event], audit: bool) -> Result<SessionState, ReplayError> {
    let (first, rest) = events
        .split_first()
        .ok_or(ReplayError::MissingSessionCreated)?;
    if !matches!(first.kind, EventKind::SessionCreated { .. }) {
        return Err(ReplayError::MissingSessionCreated);
    }
    let mut state = SessionState::from_created(first).map_err(|e| to_replay_error(first, e))?;
    for event in rest {
        if audit {
            let (kind, table) = originating_command(&state, event);
            if let Decision::Deny(reason) = state.permits(&event.actor, kind, table) {
                return Err(ReplayError::PermissionViolation {
                    seq: event.seq,
                    actor: event.actor.clone(),
                    reason,
                });
            }
        }
        fold_one(&mut state, event)?;
    }
    Ok(state)
}

fn fold_one(state: &mut SessionState, event: &Event) -> Result<(), ReplayError> {
    state.evolve(event).map_err(|e| to_replay_error(event, e))
}

fn to_replay_error(event: &Event, e: FoldError) -> ReplayError {
    match e {
        FoldError::Gap { expected, found } => ReplayError::GapInSequence { expected, found },
        FoldError::Inconsistent(reason) => ReplayError::CorruptEvent {
            seq: event.seq,
            reason,
        },
    }
}

/// The command kind (and target table) that must have produced `event`.
pub fn originating_command(state: &SessionState, event: &Event) -> (CommandKind, Option<TableId>) {
    use CommandKind as K;
    match &event.kind {
        EventKind::SessionCreated { .. } => (K::Join, None),
        EventKind::ChairAssigned { table, .. } => (K::AssignChair, Some(*table)),
        EventKind::TableOpened { table, .. } => (K::OpenTable, Some(*table)),
        EventKind::Joined { role, .. } => (K::Join, role.table()),
        EventKind::RoleChanged { user, to, .. } => {
            if user == &event.actor {
                match to {
                    Role::Public => (K::SwitchToPublic, None),
                    _ => {
                        let home = state.members.get(user).and_then(|m| m.home);
                        (K::Rejoin, home.or(to.table()))
                    }
                }
            } else {
                (K::ChangeRole, to.table())
            }
        }
        EventKind::AudienceSet { table, .. } => (K::SetAudience, Some(*table)),
        EventKind::NotePosted { table, .. } => (K::PostNote, Some(*table)),
        EventKind::NoteMoved { table, .. } => (K::MoveNote, Some(*table)),
        EventKind::ChatPosted { table, .. } => (K::PostChat, Some(*table)),
        EventKind::TurnRequested { table, .. } => (K::RequestTurn, Some(*table)),
        EventKind::TurnGranted { table, .. } => (K::GrantTurn, Some(*table)),
        EventKind::NotePromoted { table, .. } => (K::PromoteNote, Some(*table)),
        EventKind::Rotated { .. } if event.actor.is_system() => (K::Rotate, None),
        EventKind::Rotated { .. } => (K::ForceRotate, None),
        EventKind::TableClosed { table } => (K::CloseTable, Some(*table)),
        EventKind::SessionArchived {} => (K::Archive, None),
    }
}
