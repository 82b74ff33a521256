use std::collections::BTreeMap;

use super::stats::{Rational, StatementStats, Verdict};
use super::StatementId;

pub const CSV_HEADER: [&str; 6] = ["statement", "n", "median", "iqr", "agreement", "verdict"];

/// Exact decimal when the fraction terminates within four places, otherwise
/// rounded to four places.
pub fn decimal(r: &Rational) -> String {
    let (n, d) = (*r.numer(), *r.denom());
    if d == 1 {
        return n.to_string();
    }
    let scaled = Rational::new(n * 10_000, d).round().to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.abs();
    let text = format!("{sign}{}.{:04}", abs / 10_000, abs % 10_000);
    text.trim_end_matches('0').trim_end_matches('.').to_owned()
}

pub fn stats_csv(stats: &BTreeMap<StatementId, StatementStats>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for (id, s) in stats {
        let verdict = match s.verdict {
            Verdict::Consensus => "consensus",
            Verdict::NoConsensus => "no_consensus",
        };
        w.write_record([
            id.0.clone(),
            s.n.to_string(),
            decimal(&s.median),
            decimal(&s.iqr),
            decimal(&s.agreement_ratio),
            verdict.to_owned(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
