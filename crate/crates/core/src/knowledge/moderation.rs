use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::KnowledgeError;
use crate::session::Origin;
use crate::session::{Event, EventKind, MessageId, Millis, TableId, UserId};

/// A remote chat message that a moderator did not answer in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationAlert {
    pub message: MessageId,
    pub table: TableId,
    pub author: UserId,
    pub seq: u64,
    pub origin: Origin,
    pub posted_at: Millis,
    /// Seconds until the moderator reply, or until `now` if none came.
    pub waited_seconds: u64,
    pub raised_at: Millis,
    pub answered_at: Option<Millis>,
}

struct Pending {
    table: TableId,
    message: MessageId,
    author: UserId,
    seq: u64,
    at: Millis,
    answered_at: Option<Millis>,
}

/// Remote messages with no reply from the table chair or the organizer
/// within `threshold_seconds`, longest wait first.
pub fn moderation_alerts(
    events: &[Event],
    now: Millis,
    threshold_seconds: u64,
) -> Result<Vec<ModerationAlert>, KnowledgeError> {
    if threshold_seconds == 0 {
        return Err(KnowledgeError::InvalidThreshold);
    }
    let threshold = threshold_seconds * 1000;
    let mut organizer: Option<&UserId> = None;
    let mut chairs: BTreeMap<TableId, &UserId> = BTreeMap::new();
    let mut pending: Vec<Pending> = Vec::new();

    for e in events {
        match &e.kind {
            EventKind::SessionCreated { organizer: o, .. } => organizer = Some(o),
            EventKind::ChairAssigned { table, user, .. } => {
                chairs.insert(*table, user);
            }
            EventKind::ChatPosted {
                table,
                message,
                origin,
                ..
            } => {
                let moderator =
                    organizer == Some(&e.actor) || chairs.get(table) == Some(&&e.actor);
                if moderator {
                    for p in pending
                        .iter_mut()
                        .filter(|p| p.table == *table && p.answered_at.is_none())
                    {
                        p.answered_at = Some(e.at);
                    }
                } else if *origin == Origin::Remote {
                    pending.push(Pending {
                        table: *table,
                        message: message.clone(),
                        author: e.actor.clone(),
                        seq: e.seq,
                        at: e.at,
                        answered_at: None,
                    });
                }
            }
            _ => {}
        }
    }

    let mut alerts: Vec<ModerationAlert> = pending
        .into_iter()
        .filter_map(|p| {
            let until = p.answered_at.unwrap_or(now);
            let waited = until.saturating_sub(p.at);
            (waited > threshold).then(|| ModerationAlert {
                message: p.message,
                table: p.table,
                author: p.author,
                seq: p.seq,
                origin: Origin::Remote,
                posted_at: p.at,
                waited_seconds: waited / 1000,
                raised_at: p.at + threshold,
                answered_at: p.answered_at,
            })
        })
        .collect();
    alerts.sort_by(|a, b| {
        b.waited_seconds
            .cmp(&a.waited_seconds)
            .then(a.seq.cmp(&b.seq))
    });
    Ok(alerts)
}
