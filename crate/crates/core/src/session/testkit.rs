//! Scenario generator for property tests: picks plausible commands for a
//! given state from a caller-supplied choice stream.

use super::access::Role;
use super::command::Command;
use super::config::SessionConfig;
use super::ids::{SessionId, UserId};
use super::state::{Origin, SessionState, TablePhase};
use super::{create_session, Event};

/// Cast used by generated scenarios.
pub const ORGANIZER: &str = "org";
pub const CAST: [&str; 10] = ["c0", "c1", "c2", "p0", "p1", "p2", "p3", "p4", "p5", "x"];

/// A fresh three-table session plus its creation event.
pub fn fresh_session() -> (SessionState, Event) {
    let cfg = SessionConfig::new("Energy Futures", 3).with_areas(&["ideas", "agreed"]);
    create_session(SessionId::new("s"), cfg, UserId::new(ORGANIZER), 0).expect("valid config")
}

/// Source of bounded choices; `pick(n)` returns a value in `0..n`.
pub trait Chooser {
    fn pick(&mut self, n: usize) -> usize;
}

impl<F: FnMut(usize) -> usize> Chooser for F {
    fn pick(&mut self, n: usize) -> usize {
        self(n) % n.max(1)
    }
}

/// Cycles through a fixed list of raw choices.
pub struct Script<'a> {
    raw: &'a [u16],
    pos: usize,
}

impl<'a> Script<'a> {
    pub fn new(raw: &'a [u16]) -> Self {
        Self { raw, pos: 0 }
    }
}

impl Chooser for Script<'_> {
    fn pick(&mut self, n: usize) -> usize {
        if self.raw.is_empty() || n == 0 {
            return 0;
        }
        let v = self.raw[self.pos % self.raw.len()] as usize;
        self.pos += 1;
        v % n
    }
}

fn pick_from<'a, T>(c: &mut impl Chooser, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[c.pick(items.len())])
    }
}

/// Chooses an actor and a command likely (not guaranteed) to be accepted.
pub fn next_command(state: &SessionState, c: &mut impl Chooser) -> (UserId, Command) {
    let tables = state.tables.len() as u32;
    let table = c.pick(tables as usize) as u32;
    let org = UserId::new(ORGANIZER);
    let members: Vec<UserId> = state
        .members
        .keys()
        .filter(|u| **u != org)
        .cloned()
        .collect();
    let anyone = {
        let mut v: Vec<UserId> = CAST.iter().map(|s| UserId::new(*s)).collect();
        v.push(org.clone());
        v
    };
    let outsider = CAST
        .iter()
        .map(|s| UserId::new(*s))
        .find(|u| !state.members.contains_key(u));
    let seated_at = |t: u32| -> Vec<UserId> {
        state
            .members
            .iter()
            .filter(|(_, m)| matches!(m.role, Role::Participant(x) | Role::TableChair(x) if x == t))
            .map(|(u, _)| u.clone())
            .collect()
    };
    let t = &state.tables[table as usize];
    let area = |c: &mut dyn FnMut(usize) -> usize| -> String {
        let areas = &t.blackboard.areas;
        areas[c(areas.len()) % areas.len()].clone()
    };
    let mut pick_fn = |n: usize| c.pick(n);

    let branch = pick_fn(16);
    let fallback = || {
        (
            anyone[0].clone(),
            Command::PostNote {
                table,
                area: "ideas".into(),
                text: "fallback".into(),
            },
        )
    };
    match branch {
        0 | 1 => match outsider {
            Some(u) => {
                let seat = if pick_fn(4) == 0 { None } else { Some(table) };
                (u, Command::Join { table: seat })
            }
            None => fallback(),
        },
        2 => match members.get(pick_fn(members.len().max(1))) {
            Some(u) => (
                org,
                Command::AssignChair {
                    table,
                    user: u.clone(),
                },
            ),
            None => fallback(),
        },
        3 => {
            let actor = t.chair.clone().unwrap_or(org);
            (
                actor,
                Command::OpenTable {
                    table,
                    conference_url: format!("https://meet.example/{table}/{}", t.conference_log.len()),
                },
            )
        }
        4 | 5 | 6 => {
            let seated = seated_at(table);
            let actor = seated.get(pick_fn(seated.len().max(1))).cloned().unwrap_or(org);
            let text = ["use car-pooling", "solar roofs", "bike lanes", "food sharing"]
                [pick_fn(4)]
            .to_string();
            let area = area(&mut pick_fn);
            (actor, Command::PostNote { table, area, text })
        }
        7 | 8 => {
            let notes: Vec<_> = t.blackboard.notes.keys().cloned().collect();
            let seated = seated_at(table);
            let actor = seated.get(pick_fn(seated.len().max(1))).cloned().unwrap_or(org);
            match pick_from(&mut pick_fn, &notes) {
                Some(note) => {
                    let to_area = area(&mut pick_fn);
                    (
                        actor,
                        Command::MoveNote {
                            table,
                            note: note.clone(),
                            to_area,
                        },
                    )
                }
                None => fallback(),
            }
        }
        9 => {
            let seated = seated_at(table);
            let actor = seated.get(pick_fn(seated.len().max(1))).cloned().unwrap_or(org);
            let origin = if pick_fn(2) == 0 { Origin::Local } else { Origin::Remote };
            let emoticon = if pick_fn(3) == 0 { Some("smile".to_string()) } else { None };
            (
                actor,
                Command::PostChat {
                    table,
                    text: "hello table".into(),
                    emoticon,
                    origin,
                },
            )
        }
        10 => {
            let seated = seated_at(table);
            match seated.get(pick_fn(seated.len().max(1))) {
                Some(u) if pick_fn(2) == 0 => (u.clone(), Command::RequestTurn { table }),
                _ => (t.chair.clone().unwrap_or(org), Command::GrantTurn { table }),
            }
        }
        11 => {
            let notes: Vec<_> = t.blackboard.notes.keys().cloned().collect();
            match pick_from(&mut pick_fn, &notes) {
                Some(note) => (
                    t.chair.clone().unwrap_or(org),
                    Command::PromoteNote {
                        table,
                        note: note.clone(),
                    },
                ),
                None => fallback(),
            }
        }
        12 => match members.get(pick_fn(members.len().max(1))) {
            Some(u) => match state.role_of(u) {
                Some(Role::Public) => (u.clone(), Command::Rejoin { table: Some(table) }),
                _ => (u.clone(), Command::SwitchToPublic {}),
            },
            None => fallback(),
        },
        13 => {
            if pick_fn(2) == 0 {
                (UserId::system(), Command::Rotate {})
            } else {
                (org, Command::ForceRotate {})
            }
        }
        14 => {
            if t.phase == TablePhase::Open && pick_fn(3) == 0 {
                (t.chair.clone().unwrap_or(org), Command::CloseTable { table })
            } else {
                // Deliberately unauthorized or odd requests keep the rejection paths busy.
                let actor = anyone[pick_fn(anyone.len())].clone();
                (actor, Command::PromoteNote { table, note: "n1".into() })
            }
        }
        _ => match members.get(pick_fn(members.len().max(1))) {
            Some(u) => {
                let role = if pick_fn(2) == 0 {
                    Role::Public
                } else {
                    Role::Participant(table)
                };
                (org, Command::ChangeRole { user: u.clone(), role })
            }
            None => fallback(),
        },
    }
}

/// Drives `steps` generated commands through `execute`, returning the live
/// state, the log, and the number of rejected commands.
pub fn run_scenario(steps: usize, c: &mut impl Chooser) -> (SessionState, Vec<Event>, usize) {
    let (mut state, created) = fresh_session();
    let mut log = vec![created];
    let mut rejected = 0;
    for step in 0..steps {
        let (actor, cmd) = next_command(&state, c);
        let now = 1_000 * (step as u64 + 1);
        match state.execute(&cmd, &actor, now) {
            Ok(events) => log.extend(events),
            Err(_) => rejected += 1,
        }
    }
    (state, log, rejected)
}
