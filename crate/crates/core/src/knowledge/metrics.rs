use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::KnowledgeError;
use crate::session::{replay, Event, EventKind, SessionId, UserId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserActivity {
    pub notes: u64,
    pub chats: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipationSummary {
    pub session: SessionId,
    pub users: BTreeMap<UserId, UserActivity>,
    pub total_notes: u64,
    /// Notes per blackboard area, counted where each note ended up.
    pub notes_per_area: BTreeMap<String, u64>,
    /// Shannon entropy of per-user note shares, in nats.
    pub entropy: f64,
    pub rotations: u64,
    pub contributors: u64,
}

impl ParticipationSummary {
    pub fn shares(&self) -> BTreeMap<&UserId, f64> {
        if self.total_notes == 0 {
            return BTreeMap::new();
        }
        self.users
            .iter()
            .filter(|(_, a)| a.notes > 0)
            .map(|(u, a)| (u, a.notes as f64 / self.total_notes as f64))
            .collect()
    }
}

fn entropy(counts: impl Iterator<Item = u64>) -> f64 {
    let counts: Vec<u64> = counts.filter(|&c| c > 0).collect();
    if counts.len() <= 1 {
        return 0.0;
    }
    let total: u64 = counts.iter().sum();
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Replays the log and summarizes who contributed what.
pub fn session_metrics(events: &[Event]) -> Result<ParticipationSummary, KnowledgeError> {
    let state = replay(events)?;
    let mut users: BTreeMap<UserId, UserActivity> = BTreeMap::new();
    let mut rotations = 0;
    for e in events {
        match &e.kind {
            EventKind::NotePosted { .. } => users.entry(e.actor.clone()).or_default().notes += 1,
            EventKind::ChatPosted { .. } => users.entry(e.actor.clone()).or_default().chats += 1,
            EventKind::Rotated { .. } => rotations += 1,
            _ => {}
        }
    }
    let mut notes_per_area = BTreeMap::new();
    for table in state.tables.iter() {
        for note in table.blackboard.notes.values() {
            *notes_per_area.entry(note.area.clone()).or_insert(0) += 1;
        }
    }
    let total_notes = users.values().map(|a| a.notes).sum();
    let contributors = users.values().filter(|a| a.notes > 0).count() as u64;
    Ok(ParticipationSummary {
        session: state.id.clone(),
        entropy: entropy(users.values().map(|a| a.notes)),
        users,
        total_notes,
        notes_per_area,
        rotations,
        contributors,
    })
}
