//! Deliberation engine for virtual World Cafe events.
//!
//! The crate is split along the lines of what a facilitator actually does:
//!
//! - [`session`] is the event-sourced state machine for one World Cafe:
//!   tables, chairs, blackboards with post-its, chat, turn taking, table
//!   rotation, the session wall and the final archive. Commands go in,
//!   events come out, and state is always a fold over the event log.
//! - [`delphi`] runs multi-round Delphi panels with Tukey-hinge aggregation
//!   and consensus verdicts.
//! - [`knowledge`] holds the text analytics used around a session: keyword
//!   extraction, gazetteer entity recognition, repository annotation,
//!   recommendations, participation metrics and moderation alerts.
//! - [`catalog`] encodes the ten participation paradigms and classifies
//!   platform feature sets against them.
//!
//! Nothing in this crate performs I/O beyond parsing data files handed to it;
//! networking, persistence and scheduling live in `scicafe-service`.

pub mod catalog;
pub mod delphi;
pub mod knowledge;
pub mod session;

pub use session::{
    apply, archive_session, authorize, create_session, recency_class, replay, rotate, Command,
    CommandKind, CoreError, Decision, Event, EventKind, Role, SessionConfig, SessionId,
    SessionState, UserId,
};
