use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::round::{aggregate, carry_forward, Round, RoundStatus, Statement, SubmitOutcome};
use super::stats::{StatementStats, Verdict};
use super::{DelphiError, Panelist, PanelistId, RoundId, StatementId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepPlan {
    Offline(String),
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// Workshops and plenaries happen outside the system; only completion is tracked.
    Offline {
        description: String,
        completed_at: Option<u64>,
    },
    Online {
        round: Option<Round>,
        stats: Option<BTreeMap<StatementId, StatementStats>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessStatus {
    Pending,
    InStep(usize),
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub statement: StatementId,
    pub text: String,
    pub stats: StatementStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelphiProcess {
    pub title: String,
    pub steps: Vec<Step>,
    pub status: ProcessStatus,
    pub panel: Vec<Panelist>,
    /// Latest statistics per statement, with its text.
    pub outcomes: BTreeMap<StatementId, (String, StatementStats)>,
}

impl DelphiProcess {
    pub fn new(title: &str, plan: Vec<StepPlan>) -> Result<Self, DelphiError> {
        if !plan.iter().any(|s| matches!(s, StepPlan::Online)) {
            return Err(DelphiError::NoOnlineRound);
        }
        let steps = plan
            .into_iter()
            .map(|p| match p {
                StepPlan::Offline(description) => Step::Offline {
                    description,
                    completed_at: None,
                },
                StepPlan::Online => Step::Online {
                    round: None,
                    stats: None,
                },
            })
            .collect();
        Ok(Self {
            title: title.to_owned(),
            steps,
            status: ProcessStatus::Pending,
            panel: Vec::new(),
            outcomes: BTreeMap::new(),
        })
    }

    fn current_index(&mut self) -> Result<usize, DelphiError> {
        match self.status {
            ProcessStatus::Pending => {
                self.status = ProcessStatus::InStep(0);
                Ok(0)
            }
            ProcessStatus::InStep(k) => Ok(k),
            ProcessStatus::Complete => Err(DelphiError::StepOrderViolation(
                "process is complete".into(),
            )),
        }
    }

    fn advance(&mut self, from: usize) {
        self.status = if from + 1 >= self.steps.len() {
            ProcessStatus::Complete
        } else {
            ProcessStatus::InStep(from + 1)
        };
    }

    pub fn is_complete(&self) -> bool {
        self.status == ProcessStatus::Complete
    }

    pub fn complete_offline(&mut self, now: u64) -> Result<(), DelphiError> {
        let k = self.current_index()?;
        match &mut self.steps[k] {
            Step::Offline { completed_at, .. } => {
                *completed_at = Some(now);
                self.advance(k);
                Ok(())
            }
            Step::Online { .. } => Err(DelphiError::StepOrderViolation(format!(
                "step {k} is an online round"
            ))),
        }
    }

    /// Opens the round of the current online step.
    pub fn open_round(
        &mut self,
        statements: Vec<Statement>,
        panel: Vec<Panelist>,
    ) -> Result<&Round, DelphiError> {
        if panel.is_empty() {
            return Err(DelphiError::EmptyPanel);
        }
        let id = RoundId(format!("r{}", self.rounds().count() + 1));
        let ids: Vec<PanelistId> = panel.iter().map(|p| p.id.clone()).collect();
        let round = Round::new(id, statements, ids, super::DEFAULT_SCALE_MAX)?;
        self.install_round(round, Some(panel))
    }

    /// Opens the next online step with the statements carried over from the
    /// last aggregated round.
    pub fn open_carried_round(&mut self) -> Result<&Round, DelphiError> {
        let (last, stats) = self
            .last_aggregated()
            .ok_or_else(|| DelphiError::StepOrderViolation("no aggregated round yet".into()))?;
        let mut next = carry_forward(last, stats)?;
        next.id = RoundId(format!("r{}", self.rounds().count() + 1));
        self.install_round(next, None)
    }

    fn install_round(
        &mut self,
        round: Round,
        panel: Option<Vec<Panelist>>,
    ) -> Result<&Round, DelphiError> {
        let k = self.current_index()?;
        match &self.steps[k] {
            Step::Offline { .. } => {
                return Err(DelphiError::StepOrderViolation(format!(
                    "offline step {k} is not complete"
                )))
            }
            Step::Online { round: Some(r), .. } => {
                return Err(DelphiError::StepOrderViolation(format!(
                    "round {} has not been aggregated",
                    r.id
                )))
            }
            Step::Online { round: None, .. } => {}
        }
        if let Some(panel) = panel {
            for p in panel {
                if !self.panel.iter().any(|q| q.id == p.id) {
                    self.panel.push(p);
                }
            }
        }
        self.steps[k] = Step::Online {
            round: Some(round),
            stats: None,
        };
        match &self.steps[k] {
            Step::Online { round: Some(r), .. } => Ok(r),
            _ => unreachable!(),
        }
    }

    pub fn rounds(&self) -> impl Iterator<Item = &Round> {
        self.steps.iter().filter_map(|s| match s {
            Step::Online { round: Some(r), .. } => Some(r),
            _ => None,
        })
    }

    pub fn round(&self, id: &RoundId) -> Option<&Round> {
        self.rounds().find(|r| &r.id == id)
    }

    pub fn stats_for(&self, id: &RoundId) -> Option<&BTreeMap<StatementId, StatementStats>> {
        self.steps.iter().find_map(|s| match s {
            Step::Online {
                round: Some(r),
                stats: Some(st),
            } if &r.id == id => Some(st),
            _ => None,
        })
    }

    fn last_aggregated(&self) -> Option<(&Round, &BTreeMap<StatementId, StatementStats>)> {
        self.steps.iter().rev().find_map(|s| match s {
            Step::Online {
                round: Some(r),
                stats: Some(st),
            } => Some((r, st)),
            _ => None,
        })
    }

    pub fn current_round(&self) -> Option<&Round> {
        match self.status {
            ProcessStatus::InStep(k) => match &self.steps[k] {
                Step::Online {
                    round: Some(r),
                    stats: None,
                } => Some(r),
                _ => None,
            },
            _ => None,
        }
    }

    fn current_round_mut(&mut self) -> Result<&mut Round, DelphiError> {
        let ProcessStatus::InStep(k) = self.status else {
            return Err(DelphiError::StepOrderViolation("no round in progress".into()));
        };
        match &mut self.steps[k] {
            Step::Online {
                round: Some(r),
                stats: None,
            } => Ok(r),
            _ => Err(DelphiError::StepOrderViolation("no round in progress".into())),
        }
    }

    pub fn submit_response(
        &mut self,
        panelist: &PanelistId,
        statement: &StatementId,
        rating: u8,
        comment: Option<String>,
    ) -> Result<SubmitOutcome, DelphiError> {
        self.current_round_mut()?
            .submit(panelist, statement, rating, comment)
    }

    pub fn close_round(&mut self) -> Result<(), DelphiError> {
        self.current_round_mut()?.close();
        Ok(())
    }

    /// Aggregates the closed current round, records its outcomes and moves
    /// to the next step.
    pub fn aggregate_round(&mut self) -> Result<BTreeMap<StatementId, StatementStats>, DelphiError> {
        let ProcessStatus::InStep(k) = self.status else {
            return Err(DelphiError::StepOrderViolation("no round in progress".into()));
        };
        let Step::Online {
            round: Some(round),
            stats,
        } = &mut self.steps[k]
        else {
            return Err(DelphiError::StepOrderViolation("no round in progress".into()));
        };
        if stats.is_some() {
            return Err(DelphiError::StepOrderViolation("round already aggregated".into()));
        }
        if round.status == RoundStatus::Open {
            return Err(DelphiError::RoundStillOpen);
        }
        let computed = aggregate(round)?;
        for s in &round.statements {
            self.outcomes
                .insert(s.id.clone(), (s.text.clone(), computed[&s.id].clone()));
        }
        *stats = Some(computed.clone());
        self.advance(k);
        Ok(computed)
    }

    /// Ends the process early, skipping the remaining steps.
    pub fn finish(&mut self) -> Result<(), DelphiError> {
        if self.current_round().is_some() {
            return Err(DelphiError::StepOrderViolation(
                "a round is still in progress".into(),
            ));
        }
        self.status = ProcessStatus::Complete;
        Ok(())
    }

    /// Consensus statements, by descending agreement, then descending median,
    /// then statement id.
    pub fn export_recommendations(&self) -> Result<Vec<Recommendation>, DelphiError> {
        if !self.is_complete() {
            return Err(DelphiError::ProcessIncomplete);
        }
        let mut recs: Vec<Recommendation> = self
            .outcomes
            .iter()
            .filter(|(_, (_, s))| s.verdict == Verdict::Consensus)
            .map(|(id, (text, s))| Recommendation {
                statement: id.clone(),
                text: text.clone(),
                stats: s.clone(),
            })
            .collect();
        recs.sort_by(|a, b| {
            b.stats
                .agreement_ratio
                .cmp(&a.stats.agreement_ratio)
                .then(b.stats.median.cmp(&a.stats.median))
                .then(a.statement.cmp(&b.statement))
        });
        Ok(recs)
    }
}
