use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::{statement_stats, StatementStats, Verdict};
use super::{DelphiError, PanelistId, RoundId, StatementId};

pub const DEFAULT_SCALE_MAX: u8 = 9;

/// Aggregate result of the previous round, shown to panelists without names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub previous: StatementStats,
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: StatementId,
    pub text: String,
    #[serde(default)]
    pub feedback: Option<Feedback>,
}

impl Statement {
    pub fn new(id: &str, text: &str) -> Self {
        Self {
            id: StatementId(id.to_owned()),
            text: text.to_owned(),
            feedback: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub rating: u8,
    pub comment: Option<String>,
    /// Number of times the response was replaced.
    pub revision: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundStatus {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubmitOutcome {
    Recorded,
    Revised { revision: u32 },
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub id: RoundId,
    pub statements: Vec<Statement>,
    pub scale_max: u8,
    pub panel: BTreeSet<PanelistId>,
    pub responses: BTreeMap<StatementId, BTreeMap<PanelistId, Response>>,
    pub status: RoundStatus,
}

impl Round {
    pub fn new(
        id: RoundId,
        statements: Vec<Statement>,
        panel: impl IntoIterator<Item = PanelistId>,
        scale_max: u8,
    ) -> Result<Self, DelphiError> {
        if statements.is_empty() {
            return Err(DelphiError::EmptyStatements);
        }
        let panel: BTreeSet<_> = panel.into_iter().collect();
        if panel.is_empty() {
            return Err(DelphiError::EmptyPanel);
        }
        if scale_max < 2 {
            return Err(DelphiError::InvalidScale(scale_max));
        }
        let mut seen = BTreeSet::new();
        for s in &statements {
            if !seen.insert(&s.id) {
                return Err(DelphiError::DuplicateStatement(s.id.clone()));
            }
        }
        Ok(Self {
            id,
            statements,
            scale_max,
            panel,
            responses: BTreeMap::new(),
            status: RoundStatus::Open,
        })
    }

    pub fn statement(&self, id: &StatementId) -> Option<&Statement> {
        self.statements.iter().find(|s| &s.id == id)
    }

    /// Records a rating. Resubmission while open replaces the previous
    /// response and bumps its revision; an identical resubmission is a no-op.
    pub fn submit(
        &mut self,
        panelist: &PanelistId,
        statement: &StatementId,
        rating: u8,
        comment: Option<String>,
    ) -> Result<SubmitOutcome, DelphiError> {
        if self.status == RoundStatus::Closed {
            return Err(DelphiError::RoundClosed);
        }
        if !self.panel.contains(panelist) {
            return Err(DelphiError::NotEnrolled(panelist.clone()));
        }
        if self.statement(statement).is_none() {
            return Err(DelphiError::UnknownStatement(statement.clone()));
        }
        if rating < 1 || rating > self.scale_max {
            return Err(DelphiError::RatingOutOfRange {
                rating,
                max: self.scale_max,
            });
        }
        let slot = self
            .responses
            .entry(statement.clone())
            .or_default()
            .entry(panelist.clone());
        use std::collections::btree_map::Entry;
        match slot {
            Entry::Vacant(v) => {
                v.insert(Response {
                    rating,
                    comment,
                    revision: 0,
                });
                Ok(SubmitOutcome::Recorded)
            }
            Entry::Occupied(mut o) => {
                let prev = o.get_mut();
                if prev.rating == rating && prev.comment == comment {
                    return Ok(SubmitOutcome::Unchanged);
                }
                prev.rating = rating;
                prev.comment = comment;
                prev.revision += 1;
                Ok(SubmitOutcome::Revised {
                    revision: prev.revision,
                })
            }
        }
    }

    pub fn close(&mut self) {
        self.status = RoundStatus::Closed;
    }

    pub fn ratings(&self, statement: &StatementId) -> Vec<u8> {
        self.responses
            .get(statement)
            .map(|m| m.values().map(|r| r.rating).collect())
            .unwrap_or_default()
    }

    pub fn response_count(&self) -> usize {
        self.responses.values().map(BTreeMap::len).sum()
    }
}

/// Per-statement statistics of a closed round.
pub fn aggregate(round: &Round) -> Result<BTreeMap<StatementId, StatementStats>, DelphiError> {
    if round.status == RoundStatus::Open {
        return Err(DelphiError::RoundStillOpen);
    }
    round
        .statements
        .iter()
        .map(|s| {
            statement_stats(&round.ratings(&s.id))
                .map(|stats| (s.id.clone(), stats))
                .ok_or_else(|| DelphiError::UnratedStatement(s.id.clone()))
        })
        .collect()
}

/// The follow-up round: only statements without consensus, each with the
/// previous statistics and the (sorted, unattributed) comments attached.
pub fn carry_forward(
    round: &Round,
    stats: &BTreeMap<StatementId, StatementStats>,
) -> Result<Round, DelphiError> {
    if round.status == RoundStatus::Open {
        return Err(DelphiError::RoundStillOpen);
    }
    let mut carried = Vec::new();
    for statement in &round.statements {
        let s = stats
            .get(&statement.id)
            .ok_or_else(|| DelphiError::UnratedStatement(statement.id.clone()))?;
        if s.verdict == Verdict::Consensus {
            continue;
        }
        let mut comments: Vec<String> = round
            .responses
            .get(&statement.id)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|r| r.comment.clone())
            .filter(|c| !c.trim().is_empty())
            .collect();
        comments.sort();
        carried.push(Statement {
            id: statement.id.clone(),
            text: statement.text.clone(),
            feedback: Some(Feedback {
                previous: s.clone(),
                comments,
            }),
        });
    }
    if carried.is_empty() {
        return Err(DelphiError::NothingToCarry);
    }
    Round::new(
        next_round_id(&round.id),
        carried,
        round.panel.iter().cloned(),
        round.scale_max,
    )
}

fn next_round_id(id: &RoundId) -> RoundId {
    match id.0.strip_prefix('r').and_then(|n| n.parse::<u32>().ok()) {
        Some(n) => RoundId(format!("r{}", n + 1)),
        None => RoundId(format!("{}+1", id.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(n: usize) -> Vec<PanelistId> {
        (0..n).map(|i| PanelistId(format!("p{i}"))).collect()
    }

    fn round(statements: usize, panelists: usize) -> Round {
        let st = (0..statements)
            .map(|i| Statement::new(&format!("s{i}"), "text"))
            .collect();
        Round::new(RoundId("r1".into()), st, panel(panelists), DEFAULT_SCALE_MAX).unwrap()
    }

    #[test]
    fn open_round_shape() {
        let r = round(8, 10);
        assert_eq!(r.status, RoundStatus::Open);
        assert_eq!(r.statements.len() * r.panel.len(), 80);
        assert_eq!(r.response_count(), 0);
        let err = Round::new(RoundId("r1".into()), vec![], panel(3), 9).unwrap_err();
        assert_eq!(err, DelphiError::EmptyStatements);
        let err = Round::new(RoundId("r1".into()), vec![Statement::new("a", "")], vec![], 9);
        assert_eq!(err.unwrap_err(), DelphiError::EmptyPanel);
    }

    #[test]
    fn submission_rules() {
        let mut r = round(1, 2);
        let p = PanelistId("p0".into());
        let s = StatementId("s0".into());
        assert_eq!(r.submit(&p, &s, 9, None), Ok(SubmitOutcome::Recorded));
        assert_eq!(
            r.submit(&p, &s, 10, None),
            Err(DelphiError::RatingOutOfRange { rating: 10, max: 9 })
        );
        assert_eq!(r.submit(&p, &s, 0, None).is_err(), true);
        assert_eq!(r.submit(&p, &s, 9, None), Ok(SubmitOutcome::Unchanged));

        let q = PanelistId("p1".into());
        r.submit(&q, &s, 5, None).unwrap();
        assert_eq!(r.submit(&q, &s, 7, None), Ok(SubmitOutcome::Revised { revision: 1 }));
        assert_eq!(r.responses[&s][&q].rating, 7);
        assert_eq!(r.responses[&s][&q].revision, 1);

        let stranger = PanelistId("zz".into());
        assert_eq!(r.submit(&stranger, &s, 5, None), Err(DelphiError::NotEnrolled(stranger)));
        r.close();
        assert_eq!(r.submit(&p, &s, 5, None), Err(DelphiError::RoundClosed));
    }

    #[test]
    fn aggregate_needs_closed_and_rated() {
        let mut r = round(2, 1);
        let p = PanelistId("p0".into());
        r.submit(&p, &StatementId("s0".into()), 5, None).unwrap();
        assert_eq!(aggregate(&r).unwrap_err(), DelphiError::RoundStillOpen);
        r.close();
        assert_eq!(
            aggregate(&r).unwrap_err(),
            DelphiError::UnratedStatement(StatementId("s1".into()))
        );
    }

    #[test]
    fn carry_forward_keeps_only_disputed_and_anonymizes() {
        let mut r = round(2, 2);
        let (a, b) = (PanelistId("p0".into()), PanelistId("p1".into()));
        let (s0, s1) = (StatementId("s0".into()), StatementId("s1".into()));
        r.submit(&a, &s0, 5, None).unwrap();
        r.submit(&b, &s0, 5, None).unwrap();
        r.submit(&a, &s1, 1, Some("too costly".into())).unwrap();
        r.submit(&b, &s1, 9, Some("essential".into())).unwrap();
        r.close();
        let stats = aggregate(&r).unwrap();
        let next = carry_forward(&r, &stats).unwrap();
        assert_eq!(next.id, RoundId("r2".into()));
        assert_eq!(next.statements.len(), 1);
        let fb = next.statements[0].feedback.as_ref().unwrap();
        assert_eq!(fb.comments, vec!["essential", "too costly"]);
        let json = serde_json::to_string(fb).unwrap();
        assert!(!json.contains("p0") && !json.contains("p1"));

        let mut agreed = round(1, 1);
        agreed.submit(&a, &s0, 4, None).unwrap();
        agreed.close();
        let stats = aggregate(&agreed).unwrap();
        assert_eq!(carry_forward(&agreed, &stats).unwrap_err(), DelphiError::NothingToCarry);
    }
}
