//! Scripted multi-client runs against an in-process server on a virtual clock.
//!
//! ```text
//! # comment
//! session s1 title="Energy Futures" tables=2 organizer=org rotation=20 areas=ideas,agreed
//! watch spy
//! at 0s c0 Join {"table":0}
//! at 1m a#7 PostNote {"table":0,"area":"ideas","text":"bike lanes"}
//! advance 20m
//! expect ok
//! expect rejected Unauthorized
//! expect duplicate
//! expect event Rotated at 20m
//! expect count NotePosted 1
//! expect rotations 20m,40m
//! expect round-robin
//! expect permutation 0>1 1>0
//! expect seq 14
//! expect frames spy 0
//! expect consistent
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use scicafe_core::session::{
    replay, Event, EventKind, Millis, SessionId, SessionState, TableId, UserId,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::app::{CreateSessionRequest, Service};
use crate::clock::{Clock, VirtualClock};
use crate::config::ServiceConfig;
use crate::conn::Connection;
use crate::hub::RecordingSink;
use crate::protocol::{subscribe_line, AckBody, ErrorBody, ServerFrame, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    Ok,
    Rejected(String),
    Duplicate,
    Event { kind: String, at: Option<Millis> },
    Count { kind: String, n: usize },
    Rotations(Vec<Millis>),
    RoundRobin,
    Permutation(Vec<(TableId, TableId)>),
    Seq(u64),
    Frames { actor: UserId, n: usize },
    Consistent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Session {
        id: SessionId,
        request: CreateSessionRequest,
        organizer: UserId,
    },
    Watch(UserId),
    Command {
        at: Millis,
        actor: UserId,
        client_seq: Option<u64>,
        kind: String,
        payload: Value,
    },
    Advance(Millis),
    Expect(Expectation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub number: usize,
    pub text: String,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub lines: Vec<Line>,
}

/// `90s`, `20m`, `1h5m`, `250ms`, `0`, `mm:ss` or `h:mm:ss`.
pub fn parse_duration(s: &str) -> Option<Millis> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<u64> = s.split(':').map(|p| p.parse().ok()).collect::<Option<_>>()?;
        return match parts[..] {
            [m, sec] => Some((m * 60 + sec) * 1000),
            [h, m, sec] => Some((h * 3600 + m * 60 + sec) * 1000),
            _ => None,
        };
    }
    if s == "0" {
        return Some(0);
    }
    let mut total = 0u64;
    let mut rest = s;
    while !rest.is_empty() {
        let digits = rest.find(|c: char| !c.is_ascii_digit())?;
        if digits == 0 {
            return None;
        }
        let n: u64 = rest[..digits].parse().ok()?;
        rest = &rest[digits..];
        let unit_len = rest.find(|c: char| c.is_ascii_digit()).unwrap_or(rest.len());
        let factor = match &rest[..unit_len] {
            "ms" => 1,
            "s" => 1000,
            "m" => 60_000,
            "h" => 3_600_000,
            _ => return None,
        };
        total = total.checked_add(n.checked_mul(factor)?)?;
        rest = &rest[unit_len..];
    }
    Some(total)
}

pub fn format_time(t: Millis) -> String {
    let (h, m, s, ms) = (t / 3_600_000, t / 60_000 % 60, t / 1000 % 60, t % 1000);
    if ms == 0 {
        format!("{h:02}:{m:02}:{s:02}")
    } else {
        format!("{h:02}:{m:02}:{s:02}.{ms:03}")
    }
}

fn parse_session(words: &[String], err: &dyn Fn(String) -> ParseError) -> Result<Step, ParseError> {
    let [id, pairs @ ..] = words else {
        return Err(err("session needs an id".into()));
    };
    let mut request = CreateSessionRequest::new(id, 1);
    request.id = Some(SessionId::new(id.as_str()));
    let mut organizer = UserId::new("org");
    let list = |v: &str| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect::<Vec<_>>();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got {pair:?}")))?;
        let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("{k} must be a number")));
        match k {
            "title" => request.title = v.to_owned(),
            "tables" => request.tables = num(v)? as u32,
            "organizer" => organizer = UserId::new(v),
            "rotation" => request.rotation_minutes = Some(num(v)? as u32),
            "areas" => request.areas = Some(list(v)),
            "restricted" => request.restricted_to = Some(list(v).into_iter().map(UserId::new).collect()),
            "capacity" => request.table_capacity = Some(num(v)? as u32),
            "recency" => request.recency_threshold_seconds = Some(num(v)?),
            _ => return Err(err(format!("unknown session key {k}"))),
        }
    }
    Ok(Step::Session {
        id: SessionId::new(id.as_str()),
        request,
        organizer,
    })
}

fn parse_expect(rest: &str, err: &dyn Fn(String) -> ParseError) -> Result<Expectation, ParseError> {
    let words: Vec<&str> = rest.split_whitespace().collect();
    let time = |s: &str| parse_duration(s).ok_or_else(|| err(format!("bad time {s:?}")));
    let count = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad count {s:?}")));
    Ok(match words[..] {
        ["ok"] => Expectation::Ok,
        ["rejected", name] => Expectation::Rejected(name.to_owned()),
        ["duplicate"] => Expectation::Duplicate,
        ["event", kind] => Expectation::Event {
            kind: kind.to_owned(),
            at: None,
        },
        ["event", kind, "at", t] => Expectation::Event {
            kind: kind.to_owned(),
            at: Some(time(t)?),
        },
        ["count", kind, n] => Expectation::Count {
            kind: kind.to_owned(),
            n: count(n)?,
        },
        ["rotations", ts] => Expectation::Rotations(
            ts.split(',')
                .filter(|t| !t.is_empty())
                .map(time)
                .collect::<Result<_, _>>()?,
        ),
        ["rotations"] => Expectation::Rotations(Vec::new()),
        ["round-robin"] => Expectation::RoundRobin,
        ["permutation", ref pairs @ ..] => Expectation::Permutation(
            pairs
                .iter()
                .map(|p| {
                    let (a, b) = p.split_once('>').ok_or_else(|| err(format!("bad pair {p:?}")))?;
                    let t = |x: &str| x.parse::<TableId>().map_err(|_| err(format!("bad table {x:?}")));
                    Ok((t(a)?, t(b)?))
                })
                .collect::<Result<_, ParseError>>()?,
        ),
        ["seq", n] => Expectation::Seq(n.parse().map_err(|_| err(format!("bad seq {n:?}")))?),
        ["frames", actor, n] => Expectation::Frames {
            actor: UserId::new(actor),
            n: count(n)?,
        },
        ["consistent"] => Expectation::Consistent,
        _ => return Err(err(format!("unknown expectation {rest:?}"))),
    })
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = Vec::new();
        let mut have_session = false;
        let mut last_at = 0;
        for (i, raw) in text.lines().enumerate() {
            let number = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |reason: String| ParseError { line: number, reason };
            let (head, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
            let rest = rest.trim();
            let step = match head {
                "session" => {
                    if have_session {
                        return Err(err("only one session per script".into()));
                    }
                    have_session = true;
                    let words = shlex::split(rest).ok_or_else(|| err("unbalanced quotes".into()))?;
                    parse_session(&words, &err)?
                }
                _ if !have_session => return Err(err("the script must start with a session line".into())),
                "watch" if !rest.is_empty() && !rest.contains(' ') => Step::Watch(UserId::new(rest)),
                "advance" => {
                    let by = parse_duration(rest).ok_or_else(|| err(format!("bad duration {rest:?}")))?;
                    last_at += by;
                    Step::Advance(by)
                }
                "at" => {
                    let mut parts = rest.splitn(4, char::is_whitespace);
                    let (Some(t), Some(who), Some(kind)) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(err("expected: at <time> <actor>[#seq] <Command> [payload]".into()));
                    };
                    let at = parse_duration(t).ok_or_else(|| err(format!("bad time {t:?}")))?;
                    if at < last_at {
                        return Err(err(format!("time {t} goes backwards")));
                    }
                    last_at = at;
                    let (actor, client_seq) = match who.split_once('#') {
                        Some((a, s)) => (a, Some(s.parse().map_err(|_| err(format!("bad client seq {s:?}")))?)),
                        None => (who, None),
                    };
                    let payload = match parts.next().map(str::trim).filter(|p| !p.is_empty()) {
                        Some(p) => serde_json::from_str(p).map_err(|e| err(format!("payload: {e}")))?,
                        None => Value::Object(Default::default()),
                    };
                    Step::Command {
                        at,
                        actor: UserId::new(actor),
                        client_seq,
                        kind: kind.to_owned(),
                        payload,
                    }
                }
                "expect" => Step::Expect(parse_expect(rest, &err)?),
                _ => return Err(err(format!("unknown directive {head:?}"))),
            };
            lines.push(Line {
                number,
                text: trimmed.to_owned(),
                step,
            });
        }
        if !have_session {
            return Err(ParseError {
                line: 0,
                reason: "script has no session line".into(),
            });
        }
        Ok(Self { lines })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub line: usize,
    pub text: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for AssertionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} line {}: {}", self.line, self.text)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub session: SessionId,
    pub transcript: Vec<String>,
    pub assertions: Vec<AssertionResult>,
    pub events: Vec<Event>,
}

impl SimReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> usize {
        self.assertions.iter().filter(|a| !a.passed).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.transcript {
            out.push_str(l);
            out.push('\n');
        }
        for a in &self.assertions {
            out.push_str(&a.to_string());
            out.push('\n');
        }
        out.push_str(&format!(
            "{} assertions, {} failed\n",
            self.assertions.len(),
            self.failures()
        ));
        out
    }
}

struct Client {
    conn: Connection,
    sink: Arc<RecordingSink>,
    next_seq: u64,
}

struct Run {
    service: Service,
    clock: VirtualClock,
    session: SessionId,
    clients: BTreeMap<UserId, Client>,
    last: Option<Result<AckBody, ErrorBody>>,
    transcript: Vec<String>,
    logged: usize,
}

impl Run {
    fn client(&mut self, user: &UserId) -> &mut Client {
        if !self.clients.contains_key(user) {
            let sink = RecordingSink::new();
            let mut conn = Connection::trusted(self.service.hub.clone(), user.clone(), sink.clone());
            conn.handle_line(&subscribe_line(&self.session, Some(0)));
            self.clients.insert(
                user.clone(),
                Client {
                    conn,
                    sink,
                    next_seq: 1,
                },
            );
        }
        self.clients.get_mut(user).expect("inserted above")
    }

    fn log_new_events(&mut self) {
        let events = self.service.hub.events(&self.session, 0).unwrap_or_default();
        for e in &events[self.logged.min(events.len())..] {
            let body = serde_json::to_value(&e.kind).unwrap_or(Value::Null);
            self.transcript.push(format!(
                "[{}] #{} {} {} {}",
                format_time(e.at),
                e.seq,
                e.actor,
                e.kind.name(),
                body
            ));
        }
        self.logged = events.len();
    }

    fn advance_to(&mut self, t: Millis) {
        if t > self.clock.now() {
            self.clock.set(t);
        }
        self.service.hub.tick();
        self.log_new_events();
    }

    fn command(&mut self, at: Millis, actor: &UserId, seq: Option<u64>, kind: &str, payload: &Value) {
        self.advance_to(at);
        let session = self.session.clone();
        let client = self.client(actor);
        let client_seq = seq.unwrap_or(client.next_seq);
        client.next_seq = client.next_seq.max(client_seq + 1);
        let line = serde_json::json!({
            "v": PROTOCOL_VERSION,
            "session": session,
            "actor": actor,
            "client_seq": client_seq,
            "type": kind,
            "payload": payload,
            "ts": at,
        })
        .to_string();
        let before = client.sink.len();
        client.conn.handle_line(&line);
        let reply = client.sink.frames()[before..].iter().rev().find_map(|f| match f {
            ServerFrame::Ack(a) if a.ack.client_seq == client_seq => Some(Ok(a.ack.clone())),
            ServerFrame::Error(e) => Some(Err(e.error.clone())),
            _ => None,
        });
        let summary = match &reply {
            Some(Ok(a)) if a.duplicate => format!("duplicate of seq {}", a.seq),
            Some(Ok(a)) => format!("ack seq {}", a.seq),
            Some(Err(e)) => format!("rejected {}: {}", e.code, e.message),
            None => "no reply".into(),
        };
        self.transcript
            .push(format!("[{}] {actor}#{client_seq} {kind} -> {summary}", format_time(at)));
        self.last = reply;
        self.log_new_events();
    }

    fn check(&mut self, exp: &Expectation) -> Result<(), String> {
        let events = self.service.hub.events(&self.session, 0).unwrap_or_default();
        fn of_kind<'a>(events: &'a [Event], k: &'a str) -> impl Iterator<Item = &'a Event> {
            events.iter().filter(move |e| e.kind.name() == k)
        }
        let rotations: Vec<&Event> = of_kind(&events, "Rotated").collect();
        match exp {
            Expectation::Ok => match &self.last {
                Some(Ok(a)) if !a.duplicate => Ok(()),
                other => Err(format!("last command: {other:?}")),
            },
            Expectation::Duplicate => match &self.last {
                Some(Ok(a)) if a.duplicate => Ok(()),
                other => Err(format!("last command: {other:?}")),
            },
            Expectation::Rejected(name) => {
                let wanted = upper_snake(name);
                match &self.last {
                    Some(Err(e)) if e.code == wanted || e.code == *name => Ok(()),
                    other => Err(format!("last command: {other:?}")),
                }
            }
            Expectation::Event { kind, at } => {
                let found = of_kind(&events, kind).any(|e| at.is_none_or(|t| e.at == t));
                found.then_some(()).ok_or_else(|| {
                    let times: Vec<String> = of_kind(&events, kind).map(|e| format_time(e.at)).collect();
                    format!("{kind} seen at [{}]", times.join(", "))
                })
            }
            Expectation::Count { kind, n } => {
                let got = of_kind(&events, kind).count();
                (got == *n).then_some(()).ok_or_else(|| format!("found {got}"))
            }
            Expectation::Rotations(times) => {
                let got: Vec<Millis> = rotations.iter().map(|e| e.at).collect();
                (got == *times).then_some(()).ok_or_else(|| {
                    let fmt: Vec<String> = got.iter().map(|t| format_time(*t)).collect();
                    format!("rotations at [{}]", fmt.join(", "))
                })
            }
            Expectation::RoundRobin => check_round_robin(&events),
            Expectation::Permutation(pairs) => match rotations.last().map(|e| &e.kind) {
                Some(EventKind::Rotated { permutation, .. }) if permutation == pairs => Ok(()),
                Some(EventKind::Rotated { permutation, .. }) => Err(format!("last permutation {permutation:?}")),
                _ => Err("no rotation yet".into()),
            },
            Expectation::Seq(n) => {
                let got = events.last().map(|e| e.seq).unwrap_or(0);
                (got == *n).then_some(()).ok_or_else(|| format!("last seq {got}"))
            }
            Expectation::Frames { actor, n } => {
                let got = self
                    .client(actor)
                    .sink
                    .frames()
                    .iter()
                    .filter(|f| matches!(f, ServerFrame::Event(_)))
                    .count();
                (got == *n).then_some(()).ok_or_else(|| format!("{actor} received {got} event frames"))
            }
            Expectation::Consistent => {
                let live = self.service.hub.state(&self.session).ok_or("session vanished")?;
                let replayed = replay(&events).map_err(|e| format!("replay failed: {e}"))?;
                if replayed != live {
                    return Err("replayed state differs from live state".into());
                }
                for (user, c) in &self.clients {
                    let seen = c.sink.events();
                    if seen.is_empty() {
                        continue;
                    }
                    if seen != events {
                        return Err(format!("{user} observed a different sequence"));
                    }
                }
                Ok(())
            }
        }
    }
}

fn upper_snake(name: &str) -> String {
    if name.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
        return name.to_owned();
    }
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_ascii_uppercase() && i > 0 {
            out.push('_');
        }
        out.push(c.to_ascii_uppercase());
    }
    out
}

/// Every rotation moves table i's cohort to the next open table in id order
/// and leaves chairs where they were.
pub fn check_round_robin(events: &[Event]) -> Result<(), String> {
    let mut state: Option<SessionState> = None;
    for (i, e) in events.iter().enumerate() {
        if let (EventKind::Rotated { permutation, moves }, Some(before)) = (&e.kind, &state) {
            let open = before.open_tables();
            let n = open.len();
            let expected: Vec<(TableId, TableId)> =
                (0..n).map(|k| (open[k], open[(k + 1) % n])).collect();
            if *permutation != expected {
                return Err(format!("seq {}: permutation {permutation:?}, expected {expected:?}", e.seq));
            }
            if n >= 2 && permutation.iter().any(|(a, b)| a == b) {
                return Err(format!("seq {}: fixed point in {permutation:?}", e.seq));
            }
            let to: BTreeMap<TableId, TableId> = permutation.iter().copied().collect();
            for m in moves {
                if to.get(&m.from) != Some(&m.to) {
                    return Err(format!("seq {}: {} moved {}->{}", e.seq, m.user, m.from, m.to));
                }
            }
            let after = replay(&events[..=i]).map_err(|err| err.to_string())?;
            for t in &before.tables {
                if after.tables[t.id as usize].chair != t.chair {
                    return Err(format!("seq {}: chair of table {} moved", e.seq, t.id));
                }
            }
        }
        match state.as_mut() {
            Some(s) => s.evolve(e).map_err(|err| err.to_string())?,
            None => state = Some(replay(std::slice::from_ref(e)).map_err(|err| err.to_string())?),
        }
    }
    Ok(())
}

/// Runs a parsed script against a fresh in-memory server.
pub fn run(script: &Script) -> SimReport {
    let clock = VirtualClock::at(0);
    let service = Service::in_memory(ServiceConfig::default(), Arc::new(clock.clone()));
    let mut run: Option<Run> = None;
    let mut assertions = Vec::new();
    let mut pending_service = Some(service);
    for line in &script.lines {
        match &line.step {
            Step::Session { id, request, organizer } => {
                let service = pending_service.take().expect("one session per script");
                let mut r = Run {
                    service,
                    clock: clock.clone(),
                    session: id.clone(),
                    clients: BTreeMap::new(),
                    last: None,
                    transcript: Vec::new(),
                    logged: 0,
                };
                match r.service.create_session(request, organizer) {
                    Ok(_) => {
                        r.client(organizer);
                        r.log_new_events();
                    }
                    Err(e) => {
                        r.transcript.push(format!("session {id} -> rejected {}: {}", e.code, e.message));
                        r.last = Some(Err(ErrorBody::new(&e.code, e.message)));
                    }
                }
                run = Some(r);
            }
            Step::Watch(user) => {
                let r = run.as_mut().expect("parser guarantees a session first");
                r.client(user);
                r.transcript.push(format!("watch {user}"));
            }
            Step::Command { at, actor, client_seq, kind, payload } => {
                let r = run.as_mut().expect("parser guarantees a session first");
                r.command(*at, actor, *client_seq, kind, payload);
            }
            Step::Advance(by) => {
                let r = run.as_mut().expect("parser guarantees a session first");
                let t = r.clock.now() + by;
                r.advance_to(t);
            }
            Step::Expect(exp) => {
                let r = run.as_mut().expect("parser guarantees a session first");
                let outcome = r.check(exp);
                assertions.push(AssertionResult {
                    line: line.number,
                    text: line.text.clone(),
                    passed: outcome.is_ok(),
                    detail: outcome.err().unwrap_or_default(),
                });
            }
        }
    }
    let r = run.expect("parser guarantees a session");
    SimReport {
        session: r.session.clone(),
        events: r.service.hub.events(&r.session, 0).unwrap_or_default(),
        transcript: r.transcript,
        assertions,
    }
}

/// Parses and runs a script.
pub fn simulate(text: &str) -> Result<SimReport, ParseError> {
    Ok(run(&Script::parse(text)?))
}
