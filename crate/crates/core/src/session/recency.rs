use serde::{Deserialize, Serialize};

use super::error::CoreError;
use super::ids::Millis;
use super::state::PostIt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recency {
    Recent,
    Old,
}

/// A note is recent while its age is at most the threshold (inclusive).
pub fn recency_class(note: &PostIt, now: Millis, threshold_seconds: u64) -> Result<Recency, CoreError> {
    let age = now.checked_sub(note.created_at).ok_or(CoreError::ClockSkew {
        now,
        created_at: note.created_at,
    })?;
    if age <= threshold_seconds.saturating_mul(1000) {
        Ok(Recency::Recent)
    } else {
        Ok(Recency::Old)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::ids::{NoteId, UserId};

    fn note_at(created_at: Millis) -> PostIt {
        PostIt {
            id: NoteId::new("n1"),
            author: UserId::new("a"),
            text: "x".into(),
            area: "unsorted".into(),
            created_at,
            moved_history: vec![],
        }
    }

    #[test]
    fn boundaries() {
        let n = note_at(10_000);
        assert_eq!(recency_class(&n, 10_000, 300), Ok(Recency::Recent));
        assert_eq!(recency_class(&n, 10_000 + 300_000, 300), Ok(Recency::Recent));
        assert_eq!(recency_class(&n, 10_000 + 301_000, 300), Ok(Recency::Old));
        assert_eq!(recency_class(&n, 10_000 + 300_001, 300), Ok(Recency::Old));
    }

    #[test]
    fn clock_skew() {
        assert!(matches!(
            recency_class(&note_at(5), 4, 300),
            Err(CoreError::ClockSkew { .. })
        ));
    }
}
