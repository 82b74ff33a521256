//! Named Delphi processes, persisted one JSON file per process.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use scicafe_core::delphi::{
    DelphiError, DelphiProcess, Panelist, PanelistId, Recommendation, RoundId, Statement,
    StatementId, StatementStats, StepPlan, SubmitOutcome,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::is_storable_id;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("no Delphi process {0}")]
    UnknownProcess(String),
    #[error("Delphi process {0} already exists")]
    ProcessExists(String),
    #[error("invalid process id {0:?}")]
    InvalidId(String),
    #[error("no round {0}")]
    UnknownRound(String),
    #[error(transparent)]
    Delphi(#[from] DelphiError),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("stored process {0} is unreadable: {1}")]
    Corrupt(String, String),
}

/// Creates the process when it does not exist yet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewProcess {
    pub title: String,
    pub plan: Vec<StepPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenRequest {
    #[serde(default)]
    pub create: Option<NewProcess>,
    /// Fresh statements; `None` carries forward the unresolved ones.
    #[serde(default)]
    pub statements: Option<Vec<Statement>>,
    #[serde(default)]
    pub panel: Vec<Panelist>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenedRound {
    pub round: RoundId,
    pub statements: Vec<StatementId>,
    pub panel: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub id: String,
    pub title: String,
    pub status: String,
    pub rounds: usize,
}

pub struct DelphiRegistry {
    dir: Option<PathBuf>,
    processes: Mutex<BTreeMap<String, DelphiProcess>>,
}

impl DelphiRegistry {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            processes: Mutex::new(BTreeMap::new()),
        }
    }

    /// Loads all processes stored under `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut processes = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
                continue;
            };
            let process: DelphiProcess = serde_json::from_slice(&fs::read(&path)?)
                .map_err(|e| RegistryError::Corrupt(id.clone(), e.to_string()))?;
            processes.insert(id, process);
        }
        Ok(Self {
            dir: Some(dir),
            processes: Mutex::new(processes),
        })
    }

    fn persist(&self, id: &str, process: &DelphiProcess) -> Result<(), RegistryError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let tmp = dir.join(format!("{id}.json.tmp"));
        let body = serde_json::to_vec_pretty(process).map_err(std::io::Error::other)?;
        fs::write(&tmp, body)?;
        fs::rename(tmp, dir.join(format!("{id}.json")))?;
        Ok(())
    }

    /// Runs `f` on a copy of the process and keeps the result only if it
    /// succeeds and is persisted.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut DelphiProcess) -> Result<T, RegistryError>,
    ) -> Result<T, RegistryError> {
        let mut all = self.processes.lock().unwrap_or_else(|e| e.into_inner());
        let current = all
            .get(id)
            .ok_or_else(|| RegistryError::UnknownProcess(id.to_owned()))?;
        let mut next = current.clone();
        let out = f(&mut next)?;
        self.persist(id, &next)?;
        all.insert(id.to_owned(), next);
        Ok(out)
    }

    pub fn create(&self, id: &str, new: NewProcess) -> Result<(), RegistryError> {
        if !is_storable_id(id) {
            return Err(RegistryError::InvalidId(id.to_owned()));
        }
        let mut all = self.processes.lock().unwrap_or_else(|e| e.into_inner());
        if all.contains_key(id) {
            return Err(RegistryError::ProcessExists(id.to_owned()));
        }
        let process = DelphiProcess::new(&new.title, new.plan)?;
        self.persist(id, &process)?;
        all.insert(id.to_owned(), process);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<DelphiProcess> {
        self.processes
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    pub fn list(&self) -> Vec<ProcessSummary> {
        self.processes
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .map(|(id, p)| ProcessSummary {
                id: id.clone(),
                title: p.title.clone(),
                status: format!("{:?}", p.status),
                rounds: p.rounds().count(),
            })
            .collect()
    }

    /// Opens the next round, creating the process first if asked to.
    pub fn open_round(&self, id: &str, req: OpenRequest) -> Result<OpenedRound, RegistryError> {
        if let Some(new) = req.create {
            if self.get(id).is_none() {
                self.create(id, new)?;
            }
        }
        self.mutate(id, |p| {
            let round = match req.statements {
                Some(statements) => p.open_round(statements, req.panel)?,
                None => p.open_carried_round()?,
            };
            Ok(OpenedRound {
                round: round.id.clone(),
                statements: round.statements.iter().map(|s| s.id.clone()).collect(),
                panel: round.panel.len(),
            })
        })
    }

    pub fn complete_offline(&self, id: &str, now: u64) -> Result<(), RegistryError> {
        self.mutate(id, |p| Ok(p.complete_offline(now)?))
    }

    pub fn respond(
        &self,
        id: &str,
        panelist: &PanelistId,
        statement: &StatementId,
        rating: u8,
        comment: Option<String>,
    ) -> Result<SubmitOutcome, RegistryError> {
        self.mutate(id, |p| Ok(p.submit_response(panelist, statement, rating, comment)?))
    }

    pub fn close_round(&self, id: &str) -> Result<(), RegistryError> {
        self.mutate(id, |p| Ok(p.close_round()?))
    }

    /// Statistics of `round` if already aggregated; otherwise closes and
    /// aggregates the current round (which must be `round` when given).
    pub fn aggregate(
        &self,
        id: &str,
        round: Option<&RoundId>,
    ) -> Result<(RoundId, BTreeMap<StatementId, StatementStats>), RegistryError> {
        if let Some(r) = round {
            let p = self
                .get(id)
                .ok_or_else(|| RegistryError::UnknownProcess(id.to_owned()))?;
            if let Some(stats) = p.stats_for(r) {
                return Ok((r.clone(), stats.clone()));
            }
            if p.round(r).is_none() {
                return Err(RegistryError::UnknownRound(r.0.clone()));
            }
        }
        self.mutate(id, |p| {
            let current = p
                .current_round()
                .map(|r| r.id.clone())
                .ok_or_else(|| DelphiError::StepOrderViolation("no round in progress".into()))?;
            if round.is_some_and(|r| *r != current) {
                return Err(RegistryError::UnknownRound(round.unwrap().0.clone()));
            }
            let _ = p.close_round();
            Ok((current, p.aggregate_round()?))
        })
    }

    /// Recommendations of a complete process. With `finish_early` an idle
    /// process is completed first.
    pub fn export(&self, id: &str, finish_early: bool) -> Result<Vec<Recommendation>, RegistryError> {
        if finish_early {
            self.mutate(id, |p| {
                if !p.is_complete() {
                    p.finish()?;
                }
                Ok(p.export_recommendations()?)
            })
        } else {
            let p = self
                .get(id)
                .ok_or_else(|| RegistryError::UnknownProcess(id.to_owned()))?;
            Ok(p.export_recommendations()?)
        }
    }
}
