//! Per-session serial command queues, write-ahead logging and fan-out.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use scicafe_core::session::{
    apply, create_session, Command, Event, EventKind, Millis, PrivacyLevel, SessionConfig,
    SessionId, SessionState, UserId,
};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::protocol::{codes, AckBody, AckEcho, CommandEnvelope, ErrorBody, ServerFrame};
use crate::store::{is_storable_id, EventStore, Record, StoreError, TornTail};

/// Receives frames for one subscription. Returning false drops the subscription.
pub trait FrameSink: Send + Sync {
    fn deliver(&self, frame: &ServerFrame) -> bool;
}

/// Collects frames in memory.
#[derive(Default)]
pub struct RecordingSink {
    frames: Mutex<Vec<ServerFrame>>,
}

impl RecordingSink {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn frames(&self) -> Vec<ServerFrame> {
        self.frames.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn events(&self) -> Vec<Event> {
        self.frames()
            .into_iter()
            .filter_map(|f| match f {
                ServerFrame::Event(e) => Some(e.event),
                _ => None,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.frames.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FrameSink for RecordingSink {
    fn deliver(&self, frame: &ServerFrame) -> bool {
        self.frames
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(frame.clone());
        true
    }
}

pub type SubscriptionId = u64;

struct Subscriber {
    id: SubscriptionId,
    user: Option<UserId>,
    sink: Arc<dyn FrameSink>,
}

/// Whether `user` may see a session's events.
pub fn may_observe(state: &SessionState, user: Option<&UserId>) -> bool {
    match &state.config.privacy {
        PrivacyLevel::Public => true,
        PrivacyLevel::Restricted { group } => {
            user.is_some_and(|u| *u == state.organizer || group.contains(u))
        }
    }
}

struct Host {
    state: SessionState,
    records: Vec<Record>,
    applied: HashMap<(UserId, u64), Result<AckBody, ErrorBody>>,
    subscribers: Vec<Subscriber>,
    read_only: Option<String>,
    next_rotation: Option<Millis>,
}

impl Host {
    fn new(state: SessionState, records: Vec<Record>) -> Self {
        let mut applied = HashMap::new();
        for r in &records {
            if let Some(ack) = &r.ack {
                applied
                    .entry((ack.actor.clone(), ack.client_seq))
                    .and_modify(|a: &mut Result<AckBody, ErrorBody>| {
                        if let Ok(a) = a {
                            a.events += 1;
                        }
                    })
                    .or_insert_with(|| {
                        Ok(AckBody {
                            actor: ack.actor.clone(),
                            client_seq: ack.client_seq,
                            seq: r.event.seq,
                            events: 1,
                            duplicate: false,
                        })
                    });
            }
        }
        let mut host = Self {
            state,
            records,
            applied,
            subscribers: Vec::new(),
            read_only: None,
            next_rotation: None,
        };
        host.next_rotation = host.recovered_rotation();
        host
    }

    fn rotation_ms(&self) -> Millis {
        self.state.config.rotation_ms()
    }

    /// Timer position implied by the log: last rotation, or else the moment
    /// the tables last went from all-closed to some-open.
    fn recovered_rotation(&self) -> Option<Millis> {
        if self.state.open_tables().is_empty() || self.state.is_archived() {
            return None;
        }
        let mut start = None;
        let mut open = 0usize;
        for r in &self.records {
            match &r.event.kind {
                EventKind::TableOpened { .. } => {
                    if open == 0 {
                        start = Some(r.event.at);
                    }
                    open += 1;
                }
                EventKind::TableClosed { .. } => open = open.saturating_sub(1),
                EventKind::Rotated { .. } => start = Some(r.event.at),
                _ => {}
            }
        }
        start.map(|s| s + self.rotation_ms())
    }

    fn reschedule(&mut self, events: &[Event], now: Millis) {
        if self.state.open_tables().is_empty() || self.state.is_archived() {
            self.next_rotation = None;
        } else if let Some(r) = events
            .iter()
            .rev()
            .find(|e| matches!(e.kind, EventKind::Rotated { .. }))
        {
            self.next_rotation = Some(r.at + self.rotation_ms());
        } else if self.next_rotation.is_none() {
            self.next_rotation = Some(now + self.rotation_ms());
        }
    }

    fn broadcast(&mut self, frame: &ServerFrame) {
        let state = &self.state;
        self.subscribers
            .retain(|s| !may_observe(state, s.user.as_ref()) || s.sink.deliver(frame));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: SessionId,
    pub title: String,
    pub organizer: UserId,
    pub tables: usize,
    pub open_tables: usize,
    pub members: usize,
    pub last_seq: u64,
    pub archived: bool,
    pub restricted: bool,
    pub read_only: bool,
    pub next_rotation: Option<Millis>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub session: SessionId,
    pub events: usize,
    pub snapshot_seq: Option<u64>,
    pub replayed: usize,
    pub torn: Option<TornTail>,
}

#[derive(Debug, thiserror::Error)]
pub enum HubError {
    #[error("session {0} already exists")]
    SessionExists(SessionId),
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error(transparent)]
    Core(#[from] scicafe_core::CoreError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Owns every live session. Cheap to share behind an `Arc`.
pub struct Hub {
    store: Arc<dyn EventStore>,
    clock: Arc<dyn Clock>,
    sessions: RwLock<BTreeMap<SessionId, Arc<Mutex<Host>>>>,
    next_subscription: AtomicU64,
    snapshot_interval: u64,
}

fn lock(host: &Mutex<Host>) -> MutexGuard<'_, Host> {
    host.lock().unwrap_or_else(|e| e.into_inner())
}

impl Hub {
    pub fn new(store: Arc<dyn EventStore>, clock: Arc<dyn Clock>) -> Self {
        Self {
            store,
            clock,
            sessions: RwLock::new(BTreeMap::new()),
            next_subscription: AtomicU64::new(1),
            snapshot_interval: 1000,
        }
    }

    pub fn with_snapshot_interval(mut self, every: u64) -> Self {
        self.snapshot_interval = every.max(1);
        self
    }

    /// Loads every session the store knows about.
    pub fn recover(&self) -> Result<Vec<RecoveryReport>, StoreError> {
        let mut reports = Vec::new();
        for id in self.store.sessions()? {
            let Some(rec) = self.store.load(&id)? else { continue };
            reports.push(RecoveryReport {
                session: id.clone(),
                events: rec.records.len(),
                snapshot_seq: rec.snapshot_seq,
                replayed: rec.replayed,
                torn: rec.torn.clone(),
            });
            let host = Host::new(rec.state, rec.records);
            self.sessions
                .write()
                .unwrap_or_else(|e| e.into_inner())
                .insert(id, Arc::new(Mutex::new(host)));
        }
        Ok(reports)
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    fn host(&self, id: &SessionId) -> Option<Arc<Mutex<Host>>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    fn fresh_id(&self) -> SessionId {
        let sessions = self.sessions.read().unwrap_or_else(|e| e.into_inner());
        (sessions.len() + 1..)
            .map(|n| SessionId::new(format!("s{n}")))
            .find(|id| !sessions.contains_key(id))
            .expect("unbounded range")
    }

    pub fn create_session(
        &self,
        id: Option<SessionId>,
        config: SessionConfig,
        organizer: UserId,
    ) -> Result<SessionId, HubError> {
        let id = id.unwrap_or_else(|| self.fresh_id());
        if !is_storable_id(id.as_str()) {
            return Err(HubError::InvalidId(id.as_str().to_owned()));
        }
        let mut sessions = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        if sessions.contains_key(&id) {
            return Err(HubError::SessionExists(id));
        }
        let (state, created) = create_session(id.clone(), config, organizer, self.clock.now())?;
        let record = Record {
            event: created,
            ack: None,
        };
        self.store.append(&id, std::slice::from_ref(&record))?;
        sessions.insert(id.clone(), Arc::new(Mutex::new(Host::new(state, vec![record]))));
        Ok(id)
    }

    pub fn session_ids(&self) -> Vec<SessionId> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect()
    }

    pub fn summaries(&self) -> Vec<SessionSummary> {
        self.session_ids()
            .iter()
            .filter_map(|id| self.summary(id))
            .collect()
    }

    pub fn summary(&self, id: &SessionId) -> Option<SessionSummary> {
        let host = self.host(id)?;
        let h = lock(&host);
        let s = &h.state;
        Some(SessionSummary {
            id: s.id.clone(),
            title: s.config.title.clone(),
            organizer: s.organizer.clone(),
            tables: s.tables.len(),
            open_tables: s.open_tables().len(),
            members: s.members.len(),
            last_seq: s.last_seq,
            archived: s.is_archived(),
            restricted: matches!(s.config.privacy, PrivacyLevel::Restricted { .. }),
            read_only: h.read_only.is_some(),
            next_rotation: h.next_rotation,
        })
    }

    /// Copy of the current state.
    pub fn state(&self, id: &SessionId) -> Option<SessionState> {
        self.host(id).map(|h| lock(&h).state.clone())
    }

    /// Events with `seq > after`.
    pub fn events(&self, id: &SessionId, after: u64) -> Option<Vec<Event>> {
        let host = self.host(id)?;
        let h = lock(&host);
        Some(
            h.records
                .iter()
                .filter(|r| r.event.seq > after)
                .map(|r| r.event.clone())
                .collect(),
        )
    }

    pub fn next_rotation(&self, id: &SessionId) -> Option<Millis> {
        self.host(id).and_then(|h| lock(&h).next_rotation)
    }

    pub fn read_only(&self, id: &SessionId) -> Option<String> {
        self.host(id).and_then(|h| lock(&h).read_only.clone())
    }

    /// Registers a sink. Missed events after `from_seq` are delivered first.
    pub fn subscribe(
        &self,
        id: &SessionId,
        user: Option<&UserId>,
        sink: Arc<dyn FrameSink>,
        from_seq: Option<u64>,
    ) -> Result<SubscriptionId, ErrorBody> {
        let host = self
            .host(id)
            .ok_or_else(|| ErrorBody::new(codes::UNKNOWN_SESSION, format!("no session {id}")))?;
        let mut h = lock(&host);
        if !may_observe(&h.state, user) {
            return Err(ErrorBody::new(
                codes::AUTH_FAILURE,
                format!("session {id} is restricted to its group"),
            ));
        }
        if let Some(after) = from_seq {
            for r in h.records.iter().filter(|r| r.event.seq > after) {
                if !sink.deliver(&ServerFrame::event(id, r.event.clone(), r.ack.clone())) {
                    return Err(ErrorBody::new(codes::IO_FAILURE, "subscriber went away"));
                }
            }
        }
        let sid = self.next_subscription.fetch_add(1, Ordering::Relaxed);
        h.subscribers.push(Subscriber {
            id: sid,
            user: user.cloned(),
            sink,
        });
        Ok(sid)
    }

    pub fn unsubscribe(&self, id: &SessionId, subscription: SubscriptionId) {
        if let Some(host) = self.host(id) {
            lock(&host).subscribers.retain(|s| s.id != subscription);
        }
    }

    /// Applies an authenticated client's command. Resends of an already
    /// answered (actor, client_seq) get the original answer back.
    pub fn ingest(
        &self,
        env: &CommandEnvelope,
        cmd: &Command,
        authenticated: &UserId,
    ) -> Result<AckBody, ErrorBody> {
        if env.actor != *authenticated || env.actor.is_system() {
            return Err(ErrorBody::new(
                codes::AUTH_FAILURE,
                format!("connection is authenticated as {authenticated}"),
            )
            .for_command(env));
        }
        let host = self.host(&env.session).ok_or_else(|| {
            ErrorBody::new(codes::UNKNOWN_SESSION, format!("no session {}", env.session)).for_command(env)
        })?;
        let mut h = lock(&host);
        let key = (env.actor.clone(), env.client_seq);
        if let Some(prior) = h.applied.get(&key) {
            return prior.clone().map(|mut a| {
                a.duplicate = true;
                a
            });
        }
        let now = self.clock.now().max(h.state.last_at);
        self.run_due_rotations(&mut h, now);
        let echo = AckEcho {
            actor: env.actor.clone(),
            client_seq: env.client_seq,
        };
        let outcome = self
            .commit(&mut h, cmd, &env.actor, now, Some(echo))
            .map(|events| AckBody {
                actor: env.actor.clone(),
                client_seq: env.client_seq,
                seq: events[0].seq,
                events: events.len(),
                duplicate: false,
            })
            .map_err(|e| e.for_command(env));
        let keep = match &outcome {
            Ok(_) => true,
            Err(e) => e.code != codes::READ_ONLY && e.code != codes::IO_FAILURE,
        };
        if keep {
            h.applied.insert(key, outcome.clone());
        }
        outcome
    }

    /// In-process submission on behalf of `actor`, for tools and tests.
    pub fn submit(
        &self,
        session: &SessionId,
        actor: &UserId,
        client_seq: u64,
        cmd: &Command,
    ) -> Result<AckBody, ErrorBody> {
        let env = CommandEnvelope::new(session, actor, client_seq, cmd, self.clock.now());
        self.ingest(&env, cmd, actor)
    }

    fn commit(
        &self,
        h: &mut Host,
        cmd: &Command,
        actor: &UserId,
        now: Millis,
        echo: Option<AckEcho>,
    ) -> Result<Vec<Event>, ErrorBody> {
        if let Some(reason) = &h.read_only {
            return Err(ErrorBody::new(codes::READ_ONLY, format!("session is read-only: {reason}")));
        }
        let (next, events) = apply(&h.state, cmd, actor, now).map_err(|e| ErrorBody::rejected(&e))?;
        let records: Vec<Record> = events
            .iter()
            .map(|e| Record {
                event: e.clone(),
                ack: echo.clone(),
            })
            .collect();
        let session = h.state.id.clone();
        if let Err(e) = self.store.append(&session, &records) {
            let reason = e.to_string();
            tracing::error!(session = %session, error = %reason, "log append failed, session is now read-only");
            h.read_only = Some(reason.clone());
            h.broadcast(&ServerFrame::notice(&session, codes::READ_ONLY, reason.clone()));
            return Err(ErrorBody::new(codes::IO_FAILURE, reason));
        }
        let before = h.state.last_seq;
        h.state = next;
        if h.state.last_seq / self.snapshot_interval > before / self.snapshot_interval {
            if let Err(e) = self.store.write_snapshot(&h.state) {
                tracing::warn!(session = %session, error = %e, "snapshot failed");
            }
        }
        for r in &records {
            h.broadcast(&ServerFrame::event(&session, r.event.clone(), r.ack.clone()));
        }
        h.records.extend(records);
        h.reschedule(&events, now);
        Ok(events)
    }

    fn run_due_rotations(&self, h: &mut Host, now: Millis) -> usize {
        let mut fired = 0;
        while let Some(due) = h.next_rotation.filter(|d| *d <= now) {
            let at = due.max(h.state.last_at);
            match self.commit(h, &Command::Rotate {}, &UserId::system(), at, None) {
                Ok(_) => fired += 1,
                Err(e) => {
                    tracing::warn!(session = %h.state.id, code = %e.code, "scheduled rotation skipped");
                    h.next_rotation = None;
                }
            }
        }
        fired
    }

    /// Fires every rotation that is due by the clock. Returns how many fired.
    pub fn tick(&self) -> usize {
        let now = self.clock.now();
        let hosts: Vec<Arc<Mutex<Host>>> = self
            .sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect();
        hosts
            .iter()
            .map(|host| self.run_due_rotations(&mut lock(host), now))
            .sum()
    }
}
