//! A two-round panel: statements without consensus are carried forward.

use scicafe_core::delphi::*;

fn main() -> Result<(), DelphiError> {
    let mut process = DelphiProcess::new("Open science priorities", vec![StepPlan::Online, StepPlan::Online])?;
    let panel: Vec<Panelist> = ["p0", "p1", "p2", "p3", "p4"]
        .iter()
        .map(|id| Panelist::new(id, PanelistCategory::Researcher))
        .collect::<Result<_, _>>()?;
    let statements = vec![
        Statement::new("s1", "Publish all data openly"),
        Statement::new("s2", "Fund citizen laboratories"),
    ];
    process.open_round(statements, panel.clone())?;
    let first = [(8, 2), (8, 9), (7, 5), (8, 1), (9, 7)];
    for (p, (a, b)) in panel.iter().zip(first) {
        process.submit_response(&p.id, &"s1".into(), a, None)?;
        process.submit_response(&p.id, &"s2".into(), b, Some("depends on funding".into()))?;
    }
    process.close_round()?;
    print!("{}", stats_csv(&process.aggregate_round()?));

    let round = process.open_carried_round()?;
    println!("carried: {:?}", round.statements.iter().map(|s| &s.id.0).collect::<Vec<_>>());
    for p in &panel {
        process.submit_response(&p.id, &"s2".into(), 6, None)?;
    }
    process.close_round()?;
    print!("{}", stats_csv(&process.aggregate_round()?));

    for rec in process.export_recommendations()? {
        println!("{}: {} (median {})", rec.statement, rec.text, decimal(&rec.stats.median));
    }
    Ok(())
}
