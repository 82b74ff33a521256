//! Three tables, one rotation, and the event log replayed from scratch.

use scicafe_core::session::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let org = UserId::new("org");
    let cfg = SessionConfig::new("Energy Futures", 3).with_areas(&["ideas", "agreed"]);
    let (mut state, created) = create_session(SessionId::new("demo"), cfg, org.clone(), 0)?;
    let mut log = vec![created];

    for t in 0..3 {
        let chair = UserId::new(&format!("c{t}"));
        log.extend(state.execute(&Command::Join { table: Some(t) }, &chair, 0)?);
        for k in 0..2 {
            let p = UserId::new(&format!("p{t}{k}"));
            log.extend(state.execute(&Command::Join { table: Some(t) }, &p, 0)?);
        }
        log.extend(state.execute(&Command::AssignChair { table: t, user: chair.clone() }, &org, 0)?);
        let open = Command::OpenTable { table: t, conference_url: format!("https://meet.example/{t}") };
        log.extend(state.execute(&open, &chair, 0)?);
    }

    let (next, events) = rotate(&state, 20 * 60)?;
    for e in &events {
        if let EventKind::Rotated { permutation, moves } = &e.kind {
            println!("rotation at seq {}: {permutation:?}", e.seq);
            for m in moves {
                println!("  {} {} -> {}", m.user, m.from, m.to);
            }
        }
    }
    log.extend(events);

    let replayed = replay(&log)?;
    assert_eq!(replayed, next);
    println!("replayed {} events", log.len());
    Ok(())
}
