use serde::{Deserialize, Serialize};

use super::command::Command;
use super::error::CoreError;
use super::event::Event;
use super::ids::{Millis, SessionId, TableId};
use super::state::{Blackboard, ChatMessage, SessionState, Wall};

/// Everything a finished World Cafe leaves behind, filed under the session title.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionArchive {
    pub session: SessionId,
    pub task_title: String,
    pub tables: Vec<TableRecord>,
    pub wall: Wall,
    pub closed_at: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRecord {
    pub table: TableId,
    pub blackboard: Blackboard,
    pub chat: Vec<ChatMessage>,
    pub conference_urls: Vec<String>,
    pub rounds: u32,
}

impl SessionState {
    /// The archive of an archived session.
    pub fn archive(&self) -> Option<SessionArchive> {
        let closed_at = self.archived_at?;
        Some(SessionArchive {
            session: self.id.clone(),
            task_title: self.config.title.clone(),
            tables: self
                .tables
                .iter()
                .map(|t| TableRecord {
                    table: t.id,
                    blackboard: t.blackboard.clone(),
                    chat: t.chat.clone(),
                    conference_urls: t.conference_log.clone(),
                    rounds: t.round,
                })
                .collect(),
            wall: self.wall.clone(),
            closed_at,
        })
    }
}

/// Closes the session for good on behalf of its organizer.
pub fn archive_session(
    state: &SessionState,
    now: Millis,
) -> Result<(SessionState, SessionArchive, Event), CoreError> {
    let (next, mut events) = super::apply(state, &Command::Archive {}, &state.organizer, now)?;
    let archive = next.archive().expect("state was just archived");
    Ok((next, archive, events.remove(0)))
}
