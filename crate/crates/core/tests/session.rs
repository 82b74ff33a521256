use scicafe_core::session::testkit::{self, Script};
use scicafe_core::session::*;

fn org() -> UserId {
    UserId::new("org")
}

fn u(s: &str) -> UserId {
    UserId::new(s)
}

fn run(state: &mut SessionState, log: &mut Vec<Event>, actor: &str, cmd: Command, now: u64) {
    let events = state
        .execute(&cmd, &u(actor), now)
        .unwrap_or_else(|e| panic!("{actor} {cmd:?}: {e}"));
    log.extend(events);
}

/// Two open tables, chairs c0/c1, participants a and b at 0, c at 1.
fn two_table_session() -> (SessionState, Vec<Event>) {
    let cfg = SessionConfig::new("Energy Futures", 2).with_areas(&["ideas", "agreed"]);
    let (mut s, created) = create_session(SessionId::new("s1"), cfg, org(), 0).unwrap();
    let mut log = vec![created];
    for (who, table) in [("c0", 0), ("c1", 1), ("a", 0), ("b", 0), ("c", 1)] {
        run(&mut s, &mut log, who, Command::Join { table: Some(table) }, 1);
    }
    run(&mut s, &mut log, "org", Command::AssignChair { table: 0, user: u("c0") }, 2);
    run(&mut s, &mut log, "org", Command::AssignChair { table: 1, user: u("c1") }, 2);
    for t in 0..2 {
        let chair = format!("c{t}");
        let url = format!("https://meet.example/{t}");
        run(&mut s, &mut log, &chair, Command::OpenTable { table: t, conference_url: url }, 3);
    }
    (s, log)
}

#[test]
fn create_session_examples() {
    let cfg = SessionConfig::new("Energy Futures", 3);
    let (s, e) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    assert_eq!(e.seq, 1);
    assert_eq!(s.tables.len(), 3);
    assert!(s.tables.iter().all(|t| t.phase == TablePhase::Idle));
    assert_eq!(s.config.rotation_minutes, 20);
    assert_eq!(s.role_of(&org()), Some(Role::Organizer));

    let err = create_session(SessionId::new("s"), SessionConfig::new("x", 0), org(), 0);
    assert_eq!(err.unwrap_err(), CoreError::InvalidConfig(ConfigError::NoTables));
}

#[test]
fn single_table_rotation_is_identity_but_counts_a_round() {
    let cfg = SessionConfig::new("Solo", 1);
    let (mut s, created) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    let mut log = vec![created];
    run(&mut s, &mut log, "c0", Command::Join { table: Some(0) }, 1);
    run(&mut s, &mut log, "a", Command::Join { table: Some(0) }, 1);
    run(&mut s, &mut log, "org", Command::AssignChair { table: 0, user: u("c0") }, 1);
    run(&mut s, &mut log, "c0", Command::OpenTable { table: 0, conference_url: "u".into() }, 1);
    let (next, events) = rotate(&s, 10).unwrap();
    match &events[0].kind {
        EventKind::Rotated { permutation, moves } => {
            assert_eq!(permutation, &vec![(0, 0)]);
            assert_eq!(moves.len(), 1);
            assert_eq!((moves[0].from, moves[0].to), (0, 0));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(next.tables[0].round, 1);
    assert_eq!(next.role_of(&u("a")), Some(Role::Participant(0)));
}

#[test]
fn note_lifecycle() {
    let (mut s, mut log) = two_table_session();
    run(
        &mut s,
        &mut log,
        "a",
        Command::PostNote { table: 0, area: "ideas".into(), text: "use car-pooling".into() },
        10,
    );
    let note = match &log.last().unwrap().kind {
        EventKind::NotePosted { note, area, .. } => {
            assert_eq!(area, "ideas");
            note.clone()
        }
        other => panic!("unexpected {other:?}"),
    };
    run(
        &mut s,
        &mut log,
        "b",
        Command::MoveNote { table: 0, note: note.clone(), to_area: "agreed".into() },
        20,
    );
    let postit = s.note(&note).unwrap();
    assert_eq!(postit.area, "agreed");
    assert_eq!(postit.moved_history.len(), 1);
    assert_eq!(postit.moved_history[0].actor, u("b"));
    assert_eq!(postit.moved_history[0].to, postit.area);

    let replayed = replay(&log).unwrap();
    assert_eq!(replayed, s);
    assert_eq!(replayed.note(&note).unwrap().area, "agreed");
}

#[test]
fn posting_at_idle_table_fails() {
    let cfg = SessionConfig::new("x", 2);
    let (mut s, _) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    s.execute(&Command::Join { table: Some(1) }, &u("a"), 1).unwrap();
    let err = s
        .execute(
            &Command::PostNote { table: 1, area: "ideas".into(), text: "hi".into() },
            &u("a"),
            2,
        )
        .unwrap_err();
    assert_eq!(err, CoreError::TableNotOpen(1));
    let err = s
        .execute(&Command::PostNote { table: 9, area: "ideas".into(), text: "hi".into() }, &u("a"), 2)
        .unwrap_err();
    assert_eq!(err, CoreError::UnknownTable(9));
}

#[test]
fn public_cannot_post_but_can_return() {
    let (mut s, mut log) = two_table_session();
    run(&mut s, &mut log, "a", Command::SwitchToPublic {}, 5);
    assert_eq!(s.role_of(&u("a")), Some(Role::Public));
    let err = s
        .execute(&Command::PostNote { table: 0, area: "ideas".into(), text: "x".into() }, &u("a"), 6)
        .unwrap_err();
    assert_eq!(err, CoreError::Unauthorized { reason: "spectator".into() });

    // While spectating, a's cohort (b) rotates from table 0 to 1.
    run(&mut s, &mut log, "org", Command::ForceRotate {}, 7);
    assert_eq!(s.role_of(&u("b")), Some(Role::Participant(1)));
    run(&mut s, &mut log, "a", Command::Rejoin { table: Some(0) }, 8);
    assert_eq!(s.role_of(&u("a")), Some(Role::Participant(1)));
    assert_eq!(replay_audited(&log).unwrap(), s);
}

#[test]
fn rotation_moves_cohorts_and_keeps_chairs() {
    let (s, log) = two_table_session();
    let (next, events) = rotate(&s, 1_200_003).unwrap();
    match &events[0].kind {
        EventKind::Rotated { permutation, .. } => assert_eq!(permutation, &vec![(0, 1), (1, 0)]),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(next.role_of(&u("a")), Some(Role::Participant(1)));
    assert_eq!(next.role_of(&u("b")), Some(Role::Participant(1)));
    assert_eq!(next.role_of(&u("c")), Some(Role::Participant(0)));
    assert_eq!(next.tables[0].round, 1);

    // Chairs stay put, checked via replay of the full log.
    let mut full = log.clone();
    full.extend(events);
    let replayed = replay(&full).unwrap();
    assert_eq!(replayed.role_of(&u("c0")), Some(Role::TableChair(0)));
    assert_eq!(replayed.tables[0].chair, Some(u("c0")));
    assert_eq!(replayed, next);
}

#[test]
fn rotation_without_open_tables() {
    let cfg = SessionConfig::new("x", 2);
    let (s, _) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    assert_eq!(rotate(&s, 1).unwrap_err(), CoreError::NoOpenTables);
}

#[test]
fn archive_rules() {
    let (mut s, mut log) = two_table_session();
    run(
        &mut s,
        &mut log,
        "c",
        Command::PostNote { table: 1, area: "ideas".into(), text: "bike lanes".into() },
        10,
    );
    assert_eq!(
        archive_session(&s, 11).unwrap_err(),
        CoreError::TablesStillOpen(vec![0, 1])
    );
    run(&mut s, &mut log, "c0", Command::CloseTable { table: 0 }, 12);
    assert_eq!(archive_session(&s, 13).unwrap_err(), CoreError::TablesStillOpen(vec![1]));
    run(&mut s, &mut log, "c1", Command::CloseTable { table: 1 }, 14);

    let (archived, archive, event) = archive_session(&s, 15).unwrap();
    assert_eq!(archive.task_title, "Energy Futures");
    assert_eq!(archive.closed_at, 15);
    assert_eq!(archive.tables[1].blackboard.notes.len(), 1);
    assert_eq!(archive.tables[0].conference_urls, vec!["https://meet.example/0"]);
    assert!(matches!(event.kind, EventKind::SessionArchived {}));

    let err = apply(
        &archived,
        &Command::PostNote { table: 0, area: "ideas".into(), text: "late".into() },
        &u("a"),
        16,
    )
    .unwrap_err();
    assert_eq!(err, CoreError::SessionArchived);
}

#[test]
fn wall_rejects_duplicates() {
    let (mut s, mut log) = two_table_session();
    run(
        &mut s,
        &mut log,
        "a",
        Command::PostNote { table: 0, area: "ideas".into(), text: "solar".into() },
        10,
    );
    let note = s.tables[0].blackboard.notes.keys().next().unwrap().clone();
    run(&mut s, &mut log, "c0", Command::PromoteNote { table: 0, note: note.clone() }, 11);
    let err = s
        .execute(&Command::PromoteNote { table: 0, note }, &u("c0"), 12)
        .unwrap_err();
    assert!(matches!(err, CoreError::InvariantViolation(_)));
    assert_eq!(s.wall.entries.len(), 1);
}

#[test]
fn turn_taking_and_emoticons() {
    let (mut s, mut log) = two_table_session();
    run(&mut s, &mut log, "a", Command::RequestTurn { table: 0 }, 10);
    run(&mut s, &mut log, "b", Command::RequestTurn { table: 0 }, 11);
    assert!(s.execute(&Command::RequestTurn { table: 0 }, &u("a"), 12).is_err());
    run(&mut s, &mut log, "c0", Command::GrantTurn { table: 0 }, 13);
    assert_eq!(s.tables[0].speaker, Some(u("a")));
    assert_eq!(s.tables[0].turn_queue, vec![u("b")]);
    assert!(s.execute(&Command::GrantTurn { table: 0 }, &u("a"), 14).is_err());

    let chat = |emoticon: &str| Command::PostChat {
        table: 0,
        text: "agree".into(),
        emoticon: Some(emoticon.into()),
        origin: Origin::Local,
    };
    run(&mut s, &mut log, "b", chat("thumbs_up"), 15);
    assert_eq!(
        s.execute(&chat("dragon"), &u("b"), 16).unwrap_err(),
        CoreError::InvalidEmoticon("dragon".into())
    );
    assert_eq!(replay(&log).unwrap(), s);
}

#[test]
fn note_text_limits() {
    let (mut s, _) = two_table_session();
    let long = "x".repeat(MAX_NOTE_CHARS + 1);
    let err = s
        .execute(&Command::PostNote { table: 0, area: "ideas".into(), text: long }, &u("a"), 5)
        .unwrap_err();
    assert!(matches!(err, CoreError::InvalidNote(_)));
    let exact = "é".repeat(MAX_NOTE_CHARS);
    s.execute(&Command::PostNote { table: 0, area: "ideas".into(), text: exact }, &u("a"), 5)
        .unwrap();
}

#[test]
fn restricted_session_admits_group_only() {
    let cfg = SessionConfig::new("x", 1).with_privacy(PrivacyLevel::restricted(["a", "c0"]));
    let (mut s, _) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    s.execute(&Command::Join { table: Some(0) }, &u("a"), 1).unwrap();
    let err = s.execute(&Command::Join { table: Some(0) }, &u("z"), 1).unwrap_err();
    assert!(matches!(err, CoreError::Unauthorized { .. }));
}

#[test]
fn audience_may_only_narrow() {
    let cfg = SessionConfig::new("x", 1).with_privacy(PrivacyLevel::restricted(["a", "c0"]));
    let (mut s, _) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    s.execute(&Command::Join { table: Some(0) }, &u("c0"), 1).unwrap();
    s.execute(&Command::AssignChair { table: 0, user: u("c0") }, &org(), 1).unwrap();
    s.execute(&Command::OpenTable { table: 0, conference_url: "u".into() }, &u("c0"), 1)
        .unwrap();
    assert!(s
        .execute(&Command::SetAudience { table: 0, audience: PrivacyLevel::Public }, &u("c0"), 2)
        .is_err());
    s.execute(
        &Command::SetAudience { table: 0, audience: PrivacyLevel::restricted(["c0"]) },
        &u("c0"),
        2,
    )
    .unwrap();
    assert_eq!(
        s.tables[0].conference.as_ref().unwrap().audience,
        PrivacyLevel::restricted(["c0"])
    );
}

#[test]
fn capacity_blocks_extra_seats() {
    let cfg = SessionConfig::new("x", 1).with_capacity(1);
    let (mut s, _) = create_session(SessionId::new("s"), cfg, org(), 0).unwrap();
    s.execute(&Command::Join { table: Some(0) }, &u("a"), 1).unwrap();
    assert_eq!(
        s.execute(&Command::Join { table: Some(0) }, &u("b"), 1).unwrap_err(),
        CoreError::CapacityReached(0)
    );
    s.execute(&Command::Join { table: None }, &u("b"), 1).unwrap();
    assert_eq!(
        s.execute(&Command::Rejoin { table: Some(0) }, &u("b"), 2).unwrap_err(),
        CoreError::CapacityReached(0)
    );
}

#[test]
fn replay_errors() {
    assert_eq!(replay(&[]).unwrap_err(), ReplayError::MissingSessionCreated);
    let (_, mut log) = two_table_session();
    log.remove(3);
    assert!(matches!(replay(&log).unwrap_err(), ReplayError::GapInSequence { .. }));

    let (_, mut log) = two_table_session();
    log[1].kind = EventKind::NotePosted {
        table: 7,
        note: NoteId::new("n2"),
        area: "ideas".into(),
        text: "x".into(),
    };
    assert!(matches!(replay(&log).unwrap_err(), ReplayError::CorruptEvent { seq: 2, .. }));
}

#[test]
fn audit_catches_forged_events() {
    let (_, mut log) = two_table_session();
    let seq = log.len() as u64 + 1;
    log.push(Event {
        seq,
        at: 50,
        actor: u("a"),
        kind: EventKind::TableClosed { table: 0 },
    });
    assert!(replay(&log).is_ok());
    assert!(matches!(
        replay_audited(&log).unwrap_err(),
        ReplayError::PermissionViolation { .. }
    ));
}

#[test]
fn apply_is_deterministic() {
    let (s, _) = two_table_session();
    let cmd = Command::PostNote { table: 0, area: "ideas".into(), text: "x".into() };
    let a = apply(&s, &cmd, &u("a"), 99).unwrap();
    let b = apply(&s, &cmd, &u("a"), 99).unwrap();
    assert_eq!(a, b);
}

#[test]
fn events_round_trip_through_json() {
    let (_, log) = two_table_session();
    let text = serde_json::to_string(&log).unwrap();
    let back: Vec<Event> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, log);
}

mod properties {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn replay_matches_live_state(raw in proptest::collection::vec(any::<u16>(), 1..400), steps in 1usize..150) {
            let (live, log, _) = testkit::run_scenario(steps, &mut Script::new(&raw));
            prop_assert_eq!(live.last_seq as usize, log.len());
            let replayed = replay_audited(&log).unwrap();
            prop_assert_eq!(&replayed, &live);

            for table in &live.tables {
                for note in table.blackboard.notes.values() {
                    let expected = note.moved_history.last().map(|m| m.to.clone());
                    if let Some(area) = expected {
                        prop_assert_eq!(&note.area, &area);
                    }
                    for w in note.moved_history.windows(2) {
                        prop_assert!(w[0].at <= w[1].at);
                    }
                }
                let mut q = table.turn_queue.clone();
                q.sort();
                q.dedup();
                prop_assert_eq!(q.len(), table.turn_queue.len());
                if table.phase == TablePhase::Open {
                    prop_assert!(table.chair.is_some() && table.conference.is_some());
                }
            }
        }

        #[test]
        fn rotation_is_a_permutation(raw in proptest::collection::vec(any::<u16>(), 1..300), steps in 1usize..120) {
            let (state, _, _) = testkit::run_scenario(steps, &mut Script::new(&raw));
            let open = state.open_tables();
            prop_assume!(!open.is_empty());
            let before: BTreeMap<UserId, Role> = state.members.iter().map(|(u, m)| (u.clone(), m.role)).collect();
            let (after, _) = rotate(&state, state.last_at + 1).unwrap();
            let count = |s: &SessionState| s.members.values().filter(|m| matches!(m.role, Role::Participant(_))).count();
            prop_assert_eq!(count(&state), count(&after));
            for (user, role) in before {
                let now = after.role_of(&user).unwrap();
                match role {
                    Role::Participant(t) if open.contains(&t) => {
                        let Role::Participant(t2) = now else { panic!("participant lost seat") };
                        prop_assert!(open.contains(&t2));
                        if open.len() >= 2 { prop_assert_ne!(t, t2); }
                        let i = open.iter().position(|x| *x == t).unwrap();
                        prop_assert_eq!(t2, open[(i + 1) % open.len()]);
                    }
                    other => prop_assert_eq!(now, other),
                }
            }
            for (a, b) in state.tables.iter().zip(&after.tables) {
                prop_assert_eq!(&a.chair, &b.chair);
                prop_assert!(b.round >= a.round);
            }
        }
    }
}
