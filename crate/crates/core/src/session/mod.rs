//! Event-sourced World Cafe session.
//!
//! [`SessionState::decide`] validates a [`Command`] against the current state
//! and the permission matrix, [`SessionState::evolve`] folds the resulting
//! [`Event`] in. [`apply`] composes the two, so a state is always the fold of
//! its own log and [`replay`] reproduces it exactly.

mod access;
mod archive;
mod command;
mod config;
mod decide;
mod error;
mod event;
mod ids;
mod recency;
mod replay;
mod state;

pub use access::{authorize, CommandKind, Decision, Role};
pub use archive::{archive_session, SessionArchive, TableRecord};
pub use command::Command;
pub use config::{
    ConfigError, PrivacyLevel, SessionConfig, DEFAULT_AREAS, DEFAULT_EMOTICONS,
    DEFAULT_RECENCY_SECONDS, DEFAULT_ROTATION_MINUTES, UNSORTED_AREA,
};
pub use decide::{apply, create_session, rotate, MAX_CHAT_CHARS, MAX_NOTE_CHARS};
pub use error::{CoreError, ReplayError};
pub use event::{Event, EventKind, SeatMove};
pub use ids::{MessageId, Millis, NoteId, SessionId, TableId, UserId};
pub use recency::{recency_class, Recency};
pub use replay::{originating_command, replay, replay_audited, replay_onto};
pub use state::{
    Blackboard, ChatMessage, ConferenceHandle, FoldError, Membership, NoteMove, Origin, PostIt,
    SessionState, TablePhase, TableState, Wall, WallEntry,
};

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
