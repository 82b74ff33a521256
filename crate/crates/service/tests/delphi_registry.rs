use scicafe_core::delphi::{Panelist, PanelistCategory, PanelistId, RoundId, Statement, StatementId, StepPlan};
use scicafe_service::delphi::{DelphiRegistry, NewProcess, OpenRequest, RegistryError};

fn panel(n: usize) -> Vec<Panelist> {
    (0..n)
        .map(|i| Panelist::new(&format!("p{i}"), PanelistCategory::Researcher).unwrap())
        .collect()
}

fn open_first(reg: &DelphiRegistry) {
    reg.open_round(
        "obs",
        OpenRequest {
            create: Some(NewProcess {
                title: "panel".into(),
                plan: vec![StepPlan::Online, StepPlan::Online],
            }),
            statements: Some(vec![Statement::new("a", "open data"), Statement::new("b", "citizen labs")]),
            panel: panel(4),
        },
    )
    .unwrap();
}

fn rate(reg: &DelphiRegistry, statement: &str, ratings: &[u8]) {
    for (i, r) in ratings.iter().enumerate() {
        reg.respond("obs", &PanelistId(format!("p{i}")), &StatementId(statement.into()), *r, None)
            .unwrap();
    }
}

#[test]
fn processes_survive_reopening_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    {
        let reg = DelphiRegistry::open(dir.path()).unwrap();
        open_first(&reg);
        rate(&reg, "a", &[8, 8, 8, 9]);
        rate(&reg, "b", &[1, 9, 1, 9]);
    }
    let reg = DelphiRegistry::open(dir.path()).unwrap();
    let (round, stats) = reg.aggregate("obs", None).unwrap();
    assert_eq!(round, RoundId("r1".into()));
    assert_eq!(stats.len(), 2);
    let carried = reg
        .open_round(
            "obs",
            OpenRequest {
                create: None,
                statements: None,
                panel: Vec::new(),
            },
        )
        .unwrap();
    assert_eq!(carried.statements, vec![StatementId("b".into())]);
    rate(&reg, "b", &[5, 5, 5, 6]);
    reg.aggregate("obs", None).unwrap();
    let recs = reg.export("obs", false).unwrap();
    assert_eq!(recs.len(), 2);

    let again = DelphiRegistry::open(dir.path()).unwrap();
    assert_eq!(again.export("obs", false).unwrap(), recs);
    let (_, first) = again.aggregate("obs", Some(&RoundId("r1".into()))).unwrap();
    assert_eq!(first, stats);
}

#[test]
fn registry_errors() {
    let reg = DelphiRegistry::in_memory();
    assert!(matches!(reg.close_round("ghost"), Err(RegistryError::UnknownProcess(_))));
    open_first(&reg);
    assert!(matches!(
        reg.create("obs", NewProcess { title: "x".into(), plan: vec![StepPlan::Online] }),
        Err(RegistryError::ProcessExists(_))
    ));
    assert!(matches!(
        reg.create("../x", NewProcess { title: "x".into(), plan: vec![StepPlan::Online] }),
        Err(RegistryError::InvalidId(_))
    ));
    assert!(matches!(reg.export("obs", false), Err(RegistryError::Delphi(_))));
    assert!(matches!(
        reg.aggregate("obs", Some(&RoundId("r9".into()))),
        Err(RegistryError::UnknownRound(_))
    ));
}
