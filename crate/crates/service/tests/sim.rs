use scicafe_service::sim::{simulate, Script};

const ROTATION: &str = include_str!("scripts/rotation.sim");
const RESTRICTED: &str = include_str!("scripts/restricted.sim");

#[test]
fn rotation_script_passes() {
    let report = simulate(ROTATION).unwrap();
    assert!(report.passed(), "{}", report.render());
    assert_eq!(report.assertions.len(), 22);
}

#[test]
fn restricted_script_passes() {
    let report = simulate(RESTRICTED).unwrap();
    assert!(report.passed(), "{}", report.render());
}

#[test]
fn runs_are_deterministic() {
    let a = simulate(ROTATION).unwrap();
    let b = simulate(ROTATION).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.transcript, b.transcript);
}

#[test]
fn failing_expectations_are_reported_not_fatal() {
    let report = simulate(
        "session s tables=1\nat 0s a Join {\"table\":0}\nexpect rejected Unauthorized\nexpect count Joined 1\n",
    )
    .unwrap();
    assert!(!report.passed());
    assert_eq!(report.failures(), 1);
    assert!(report.render().contains("FAIL line 3"));
}

#[test]
fn parse_error_names_the_line() {
    let err = Script::parse("session s\nat 1m a Join {broken\n").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(err.to_string().starts_with("line 2:"));
}
