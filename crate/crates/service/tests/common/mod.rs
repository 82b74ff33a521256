#![allow(dead_code)]

use std::sync::Arc;

use scicafe_core::session::{Command, PrivacyLevel, SessionConfig, SessionId, UserId};
use scicafe_service::hub::Hub;
use scicafe_service::store::{EventStore, MemoryStore};
use scicafe_service::VirtualClock;

pub fn u(name: &str) -> UserId {
    UserId::new(name)
}

pub fn memory_hub() -> (Arc<Hub>, VirtualClock, Arc<MemoryStore>) {
    let clock = VirtualClock::at(0);
    let store = Arc::new(MemoryStore::new());
    let hub = Hub::new(store.clone(), Arc::new(clock.clone()));
    (Arc::new(hub), clock, store)
}

pub fn hub_on(store: Arc<dyn EventStore>, clock: &VirtualClock) -> Arc<Hub> {
    Arc::new(Hub::new(store, Arc::new(clock.clone())))
}

/// Session `id` with `tables` open tables, chair `c<t>` and `per_table`
/// participants `p<t><k>` at each.
pub fn seeded(hub: &Hub, id: &str, tables: u32, per_table: u32, privacy: PrivacyLevel) -> SessionId {
    let cfg = SessionConfig::new("Energy Futures", tables)
        .with_areas(&["ideas", "agreed"])
        .with_privacy(privacy);
    let sid = hub
        .create_session(Some(SessionId::new(id)), cfg, u("org"))
        .expect("session created");
    let mut seq = 0u64;
    let mut run = |actor: &UserId, cmd: Command| {
        seq += 1;
        hub.submit(&sid, actor, 1_000_000 + seq, &cmd)
            .unwrap_or_else(|e| panic!("{cmd:?} by {actor}: {e:?}"));
    };
    for t in 0..tables {
        let chair = u(&format!("c{t}"));
        run(&chair, Command::Join { table: Some(t) });
        run(&u("org"), Command::AssignChair { table: t, user: chair.clone() });
        for k in 0..per_table {
            run(&u(&format!("p{t}{k}")), Command::Join { table: Some(t) });
        }
    }
    for t in 0..tables {
        run(
            &u(&format!("c{t}")),
            Command::OpenTable {
                table: t,
                conference_url: format!("https://meet.example/{t}"),
            },
        );
    }
    sid
}

pub fn note(table: u32, text: &str) -> Command {
    Command::PostNote {
        table,
        area: "ideas".into(),
        text: text.into(),
    }
}
