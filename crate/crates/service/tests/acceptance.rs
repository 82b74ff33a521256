//! One PASS/FAIL line per acceptance criterion. Exits non-zero on failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command as Process;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{hub_on, memory_hub, note, seeded, u};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use scicafe_core::catalog::{classify, Catalog, ParadigmId, Subfunction};
use scicafe_core::delphi::{
    statement_stats, DelphiProcess, Panelist, PanelistCategory, PanelistId, Rational, Statement, StatementId,
    StepPlan, Verdict,
};
use scicafe_core::knowledge::{extract_keywords, recommend, session_metrics, Corpus, Document, KeywordVector};
use scicafe_core::session::testkit::{next_command, Script};
use scicafe_core::session::{replay, replay_audited, EventKind, Millis, PrivacyLevel, SessionConfig, SessionId};
use scicafe_service::sim::simulate;
use scicafe_service::store::{EventStore, FileStore};
use scicafe_service::{RecordingSink, ServerFrame, VirtualClock};

const CRASH_CHILD_ENV: &str = "SCICAFE_ACCEPTANCE_CRASH_DIR";
const MIN: Millis = 60_000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rotation_protocol() -> Check {
    let started = Instant::now();
    let report = simulate(include_str!("scripts/rotation.sim")).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(report.passed(), || report.render())?;
    let times: Vec<Millis> = report
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Rotated { .. }))
        .map(|e| e.at)
        .collect();
    ensure(times == [20 * MIN, 40 * MIN, 60 * MIN], || format!("rotations at {times:?}"))?;
    scicafe_service::sim::check_round_robin(&report.events)?;
    let state = replay(&report.events).map_err(|e| e.to_string())?;
    let seated = state.members.values().filter(|m| m.role.table().is_some()).count();
    ensure(seated == 18, || format!("{seated} seated"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("3 tables x 6, rotations at t+20/40/60 min, round-robin, chairs stationary, {elapsed:.2?}"))
}

fn replay_determinism() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let stats = std::cell::Cell::new((0usize, 0usize));
    runner
        .run(&prop::collection::vec(any::<u16>(), 10..160), |raw| {
            let (hub, clock, _) = memory_hub();
            let cfg = SessionConfig::new("Energy Futures", 3).with_areas(&["ideas", "agreed"]);
            let s = hub.create_session(Some(SessionId::new("s")), cfg, u("org")).unwrap();
            let mut choices = Script::new(&raw);
            let mut seqs: BTreeMap<String, u64> = BTreeMap::new();
            let mut rejected = 0;
            for _ in 0..raw.len() {
                let state = hub.state(&s).unwrap();
                let (actor, cmd) = next_command(&state, &mut choices);
                clock.advance(raw[0] as u64 % 7 * 45_000);
                hub.tick();
                let seq = seqs.entry(actor.as_str().to_owned()).or_insert(0);
                *seq += 1;
                if hub.submit(&s, &actor, *seq, &cmd).is_err() {
                    rejected += 1;
                }
            }
            let log = hub.events(&s, 0).unwrap();
            let live = hub.state(&s).unwrap();
            prop_assert_eq!(&replay(&log).unwrap(), &live);
            prop_assert_eq!(&replay_audited(&log).map_err(|e| TestCaseError::fail(e.to_string()))?, &live);
            let (e, r) = stats.get();
            stats.set((e + log.len(), r + rejected));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let (events, rejected) = stats.get();
    Ok(format!("1000 sequences, {events} events replayed and audited, {rejected} rejections, 0 failures"))
}

fn privacy() -> Check {
    let (hub, _, _) = memory_hub();
    let group: BTreeSet<_> = ["c0", "c1", "p00", "p10"].into_iter().map(u).collect();
    let closed = seeded(&hub, "closed", 2, 1, PrivacyLevel::Restricted { group });
    let open = seeded(&hub, "open", 2, 1, PrivacyLevel::Public);
    let spy_closed = RecordingSink::new();
    let spy_open = RecordingSink::new();
    let denied = hub.subscribe(&closed, Some(&u("spy")), spy_closed.clone(), Some(0)).is_err();
    hub.subscribe(&open, Some(&u("spy")), spy_open.clone(), Some(0)).map_err(|e| e.message)?;
    for i in 1..=25 {
        hub.submit(&closed, &u("p00"), i, &note(0, "closed idea")).map_err(|e| e.message)?;
        hub.submit(&open, &u("p00"), i, &note(0, "open idea")).map_err(|e| e.message)?;
    }
    hub.submit(&closed, &u("org"), 1, &scicafe_core::session::Command::ForceRotate {}).map_err(|e| e.message)?;
    hub.submit(&open, &u("org"), 1, &scicafe_core::session::Command::ForceRotate {}).map_err(|e| e.message)?;
    ensure(denied, || "restricted subscribe accepted".into())?;
    ensure(spy_closed.len() == 0, || format!("spy got {} frames on restricted", spy_closed.len()))?;
    let frames = spy_open.frames();
    ensure(frames.iter().all(|f| matches!(f, ServerFrame::Event(_))), || "non-event frame".into())?;
    let seqs: Vec<u64> = spy_open.events().iter().map(|e| e.seq).collect();
    let total = hub.state(&open).unwrap().last_seq;
    ensure(seqs == (1..=total).collect::<Vec<_>>(), || format!("public seqs {seqs:?}"))?;
    Ok(format!("restricted: 0 frames; public: {total} frames, seq 1..={total} gapless"))
}

/// Brute force: the median is the midpoint of all half-step grid points
/// that have at most half the ratings strictly on either side.
fn grid_median(values: &[i64]) -> Rational {
    let n = values.len() as i64;
    let ok: Vec<i64> = (2..=18)
        .filter(|&twice| {
            let below = values.iter().filter(|&&v| 2 * v < twice).count() as i64;
            let above = values.iter().filter(|&&v| 2 * v > twice).count() as i64;
            2 * below <= n && 2 * above <= n
        })
        .collect();
    Rational::new(ok[0] + ok[ok.len() - 1], 4)
}

fn oracle(ratings: &[u8]) -> (Rational, Rational, Rational, Rational) {
    let mut pool: Vec<i64> = ratings.iter().map(|&r| r as i64).collect();
    let half = pool.len() / 2;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut rest = pool.clone();
    for _ in 0..half {
        let (i, _) = rest.iter().enumerate().min_by_key(|(_, v)| **v).unwrap();
        lower.push(rest.remove(i));
        let (j, _) = rest.iter().enumerate().max_by_key(|(_, v)| **v).unwrap();
        upper.push(rest.remove(j));
    }
    let median = grid_median(&pool);
    let (q1, q3) = if half == 0 {
        (median, median)
    } else {
        (grid_median(&lower), grid_median(&upper))
    };
    pool.retain(|&v| {
        let d = Rational::from_integer(v) - median;
        d <= Rational::from_integer(1) && -d <= Rational::from_integer(1)
    });
    (median, q1, q3, Rational::new(pool.len() as i64, ratings.len() as i64))
}

const ROUND_ONE: [(&str, [u8; 10]); 8] = [
    ("s1", [6, 7, 7, 7, 7, 8, 8, 9, 9, 9]),
    ("s2", [1, 2, 5, 5, 6, 8, 9, 9, 9, 9]),
    ("s3", [1, 9, 1, 9, 1, 9, 5, 5, 5, 5]),
    ("s4", [7, 7, 8, 8, 8, 8, 8, 9, 9, 9]),
    ("s5", [8; 10]),
    ("s6", [6, 6, 7, 7, 7, 7, 7, 8, 8, 9]),
    ("s7", [5, 6, 6, 6, 6, 7, 7, 7, 7, 8]),
    ("s8", [8, 8, 8, 9, 9, 9, 9, 9, 9, 9]),
];

const ROUND_TWO: [(&str, [u8; 10]); 3] = [
    ("s1", [7, 7, 7, 8, 8, 8, 8, 8, 9, 9]),
    ("s2", [6, 7, 7, 7, 7, 7, 8, 8, 8, 9]),
    ("s3", [4, 5, 5, 5, 5, 5, 6, 6, 6, 7]),
];

fn rate(process: &mut DelphiProcess, table: &[(&str, [u8; 10])]) -> Result<(), String> {
    for (statement, ratings) in table {
        for (i, r) in ratings.iter().enumerate() {
            process
                .submit_response(&PanelistId(format!("p{i}")), &StatementId(statement.to_string()), *r, None)
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn delphi() -> Check {
    for (id, ratings) in ROUND_ONE.iter().chain(&ROUND_TWO) {
        let s = statement_stats(ratings).ok_or("no ratings")?;
        let (median, q1, q3, agreement) = oracle(ratings);
        ensure(
            (s.median, s.q1, s.q3, s.iqr, s.agreement_ratio) == (median, q1, q3, q3 - q1, agreement),
            || format!("{id}: {s:?} vs oracle {median} {q1} {q3} {agreement}"),
        )?;
    }
    let fixture = statement_stats(&ROUND_ONE[0].1).ok_or("no ratings")?;
    ensure(
        (fixture.median, fixture.q1, fixture.q3, fixture.agreement_ratio)
            == (Rational::new(15, 2), Rational::from_integer(7), Rational::from_integer(9), Rational::new(3, 5)),
        || format!("fixture {fixture:?}"),
    )?;

    use PanelistCategory::*;
    let cats = [PolicyMaker, PolicyMaker, Researcher, Researcher, ScienceMuseum, ScienceMuseum, School, School, Citizen, Citizen];
    let panel: Vec<Panelist> = cats
        .into_iter()
        .enumerate()
        .map(|(i, c)| Panelist::new(&format!("p{i}"), c).unwrap())
        .collect();
    let err = |e: scicafe_core::delphi::DelphiError| e.to_string();
    let mut process = DelphiProcess::new("panel", vec![StepPlan::Online, StepPlan::Online]).map_err(err)?;
    let statements = ROUND_ONE.iter().map(|(id, _)| Statement::new(id, "recommendation")).collect();
    process.open_round(statements, panel).map_err(err)?;
    rate(&mut process, &ROUND_ONE)?;
    process.close_round().map_err(err)?;
    let first = process.aggregate_round().map_err(err)?;
    let disputed = first.values().filter(|s| s.verdict == Verdict::NoConsensus).count();
    process.open_carried_round().map_err(err)?;
    rate(&mut process, &ROUND_TWO)?;
    process.close_round().map_err(err)?;
    process.aggregate_round().map_err(err)?;
    let recs = process.export_recommendations().map_err(err)?;
    ensure(recs.len() == 8, || format!("{} recommendations", recs.len()))?;
    ensure(recs.iter().all(|r| r.stats.verdict == Verdict::Consensus), || "non-consensus export".into())?;
    Ok(format!(
        "11 rating sets equal the grid oracle exactly; fixture median 15/2 q1 7 q3 9 agreement 3/5; {disputed} carried, 8 exported"
    ))
}

fn tfidf_oracle(shapes: &[[u32; 2]], target: usize) -> Vec<(&'static str, f64)> {
    const VOCAB: [&str; 2] = ["alpha", "beta"];
    let n = shapes.len() as u128;
    let df: Vec<u128> = (0..2).map(|t| shapes.iter().filter(|s| s[t] > 0).count() as u128).collect();
    let mut present: Vec<usize> = (0..2).filter(|&t| shapes[target][t] > 0).collect();
    present.sort_by(|&a, &b| {
        let (ca, cb) = (shapes[target][a], shapes[target][b]);
        (n.pow(cb) * df[a].pow(ca)).cmp(&(n.pow(ca) * df[b].pow(cb))).then(VOCAB[a].cmp(VOCAB[b]))
    });
    present
        .into_iter()
        .map(|t| (VOCAB[t], shapes[target][t] as f64 * ((n as f64).ln() - (df[t] as f64).ln())))
        .collect()
}

fn check_corpus(shapes: &[[u32; 2]]) -> Result<(), String> {
    let docs = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut tokens = vec!["beta".to_owned(); s[1] as usize];
            tokens.extend(std::iter::repeat_n("alpha".to_owned(), s[0] as usize));
            Document {
                id: format!("d{i}"),
                text: String::new(),
                tokens,
            }
        })
        .collect();
    let corpus = Corpus::new(docs);
    for (i, s) in shapes.iter().enumerate() {
        let got = extract_keywords(&format!("d{i}"), &corpus, 2);
        if s[0] + s[1] == 0 {
            ensure(got.is_err(), || format!("{shapes:?}: empty doc {i} ranked"))?;
            continue;
        }
        let got = got.map_err(|e| e.to_string())?;
        let want = tfidf_oracle(shapes, i);
        ensure(
            got.len() == want.len()
                && got.iter().zip(&want).all(|((gt, gw), (wt, ww))| gt == wt && (gw - ww).abs() < 1e-12),
            || format!("{shapes:?} doc {i}: {got:?} vs {want:?}"),
        )?;
    }
    Ok(())
}

fn exhaustive_tfidf() -> Result<usize, String> {
    let shapes: Vec<[u32; 2]> = (0..=10u32).flat_map(|a| (0..=10 - a).map(move |b| [a, b])).collect();
    let m = shapes.len();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let shapes = &shapes;
                scope.spawn(move || -> Result<usize, String> {
                    let mut count = 0;
                    for i in (w..m).step_by(workers) {
                        check_corpus(&[shapes[i]])?;
                        count += 1;
                        for j in i..m {
                            check_corpus(&[shapes[i], shapes[j]])?;
                            count += 1;
                            for k in j..m {
                                check_corpus(&[shapes[i], shapes[j], shapes[k]])?;
                                count += 1;
                                for l in k..m {
                                    check_corpus(&[shapes[i], shapes[j], shapes[k], shapes[l]])?;
                                    count += 1;
                                }
                            }
                        }
                    }
                    Ok(count)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).sum()
    })
}

fn knowledge() -> Check {
    let corpora = exhaustive_tfidf()?;

    let entropy_of = |counts: &[u64]| -> Result<f64, String> {
        let (hub, _, _) = memory_hub();
        let s = seeded(&hub, "m", 1, counts.len() as u32, PrivacyLevel::Public);
        let mut seq = 0;
        for (k, c) in counts.iter().enumerate() {
            for _ in 0..*c {
                seq += 1;
                hub.submit(&s, &u(&format!("p0{k}")), seq, &note(0, "idea")).map_err(|e| e.message)?;
            }
        }
        Ok(session_metrics(&hub.events(&s, 0).unwrap()).map_err(|e| e.to_string())?.entropy)
    };
    let point = entropy_of(&[5])?;
    let uniform = entropy_of(&[2, 2, 2, 2])?;
    let skewed = entropy_of(&[3, 1])?;
    let expected_skew = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    ensure(point.abs() < 1e-12, || format!("point mass {point}"))?;
    ensure((uniform - 4f64.ln()).abs() < 1e-12, || format!("uniform {uniform}"))?;
    ensure((skewed - expected_skew).abs() < 1e-12, || format!("3:1 {skewed}"))?;

    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    let weights = || prop::collection::vec((0u8..6, 0.01f64..10.0), 1..6);
    runner
        .run(
            &(weights(), prop::collection::vec(weights(), 1..8), 0.001f64..1000.0),
            |(profile, items, scale)| {
                let vector = |w: &[(u8, f64)]| KeywordVector::from_weights(w.iter().map(|(t, x)| (format!("t{t}"), *x)));
                let items: Vec<(String, KeywordVector)> =
                    items.iter().enumerate().map(|(i, w)| (format!("i{i}"), vector(w))).collect();
                let refs = || items.iter().map(|(id, v)| (id.as_str(), v));
                let scaled: Vec<(u8, f64)> = profile.iter().map(|(t, w)| (*t, w * scale)).collect();
                let a: Vec<String> = recommend(&vector(&profile), refs(), items.len()).into_iter().map(|r| r.0).collect();
                let b: Vec<String> = recommend(&vector(&scaled), refs(), items.len()).into_iter().map(|r| r.0).collect();
                prop_assert_eq!(a, b);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "tf-idf equals oracle on all {corpora} corpora (<=4 docs, <=10 tokens, 2-term vocabulary); entropy 0 / ln 4 / 3:1 within 1e-12; recommend order scale-invariant over 500 cases"
    ))
}

fn catalog() -> Check {
    let catalog = Catalog::shipped();
    let ids: Vec<ParadigmId> = catalog.paradigms().map(|p| p.id).collect();
    let codes: Vec<&str> = ids.iter().map(|p| p.code()).collect();
    ensure(
        codes == ["INIP", "AST", "CODI", "DIREP", "REP", "COST", "SHAGO", "MAP", "CODE", "COPS"],
        || format!("{codes:?}"),
    )?;
    let dominant = |f: Subfunction| -> Result<Vec<ParadigmId>, String> {
        Ok(classify(&catalog, &BTreeSet::from([f])).map_err(|e| e.to_string())?.dominant)
    };
    let share = dominant(Subfunction::ShareGoods)?;
    let discuss = dominant(Subfunction::Discuss)?;
    ensure(share == [ParadigmId::SHAGO], || format!("ShareGoods -> {share:?}"))?;
    ensure(discuss == [ParadigmId::CODI], || format!("Discuss -> {discuss:?}"))?;
    Ok("10 paradigms in order; ShareGoods -> SHAGO; Discuss -> CODI".into())
}

/// Child side: writes 1500 events to a file store, then aborts mid-flight.
fn crash_child(dir: &str) -> ! {
    let clock = VirtualClock::at(0);
    let hub = hub_on(Arc::new(FileStore::open(dir).unwrap()), &clock);
    let s = seeded(&hub, "crash", 2, 2, PrivacyLevel::Public);
    let mut i = 0;
    while hub.state(&s).unwrap().last_seq < 1500 {
        i += 1;
        clock.advance(7_000);
        hub.tick();
        let who = u(["p00", "p01", "c0", "p11"][(i % 4) as usize]);
        let table = hub.state(&s).unwrap().role_of(&who).and_then(|r| r.table()).unwrap();
        hub.submit(&s, &who, i, &note(table, &format!("idea {i}"))).unwrap();
    }
    std::process::abort();
}

fn crash_recovery() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let status = Process::new(exe)
        .env(CRASH_CHILD_ENV, dir.path())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(!status.success(), || "child exited cleanly".into())?;

    let store = Arc::new(FileStore::open(dir.path()).map_err(|e| e.to_string())?);
    let s = SessionId::new("crash");
    let recovered = store.load(&s).map_err(|e| e.to_string())?.ok_or("nothing recovered")?;
    let log: Vec<_> = recovered.records.iter().map(|r| r.event.clone()).collect();
    let full = replay(&log).map_err(|e| e.to_string())?;
    let a = serde_json::to_vec(&recovered.state).unwrap();
    let b = serde_json::to_vec(&full).unwrap();
    ensure(log.len() == 1500, || format!("{} events on disk", log.len()))?;
    ensure(recovered.snapshot_seq == Some(1000), || format!("snapshot {:?}", recovered.snapshot_seq))?;
    ensure(recovered.replayed == 500, || format!("replayed {}", recovered.replayed))?;
    ensure(a == b && recovered.state == full, || "recovered state differs from full replay".into())?;
    let hub = hub_on(store, &VirtualClock::at(recovered.state.last_at));
    hub.recover().map_err(|e| e.to_string())?;
    ensure(hub.state(&s).as_ref() == Some(&full), || "hub recovery differs".into())?;
    Ok(format!("aborted child after seq 1500; snapshot@1000 + 500 replayed is byte-identical to full replay ({} bytes)", a.len()))
}

fn main() {
    if let Ok(dir) = std::env::var(CRASH_CHILD_ENV) {
        crash_child(&dir);
    }
    let criteria: [(&str, fn() -> Check); 7] = [
        ("rotation protocol", rotation_protocol),
        ("replay determinism", replay_determinism),
        ("privacy", privacy),
        ("delphi", delphi),
        ("knowledge exchange", knowledge),
        ("catalog", catalog),
        ("crash recovery", crash_recovery),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
