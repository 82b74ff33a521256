use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i64>;

pub const MAX_CONSENSUS_IQR: i64 = 2;
/// 7/10 of ratings must sit within one point of the median.
pub const MIN_AGREEMENT: (i64, i64) = (7, 10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Consensus,
    NoConsensus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementStats {
    pub n: usize,
    pub median: Rational,
    pub q1: Rational,
    pub q3: Rational,
    pub iqr: Rational,
    pub agreement_ratio: Rational,
    pub verdict: Verdict,
}

fn median_sorted(xs: &[u8]) -> Rational {
    let n = xs.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        Rational::from_integer(i64::from(xs[n / 2]))
    } else {
        Rational::new(i64::from(xs[n / 2 - 1]) + i64::from(xs[n / 2]), 2)
    }
}

/// Median and Tukey hinges of a non-empty sample. For odd n the median
/// element belongs to neither half.
pub fn tukey_summary(ratings: &[u8]) -> Option<(Rational, Rational, Rational)> {
    if ratings.is_empty() {
        return None;
    }
    let mut xs = ratings.to_vec();
    xs.sort_unstable();
    let n = xs.len();
    let median = median_sorted(&xs);
    if n == 1 {
        return Some((median, median, median));
    }
    let lower = &xs[..n / 2];
    let upper = &xs[(n + 1) / 2..];
    Some((median_sorted(lower), median, median_sorted(upper)))
}

pub fn statement_stats(ratings: &[u8]) -> Option<StatementStats> {
    let (q1, median, q3) = tukey_summary(ratings)?;
    let n = ratings.len();
    let one = Rational::from_integer(1);
    let close = ratings
        .iter()
        .filter(|r| {
            let d = Rational::from_integer(i64::from(**r)) - median;
            d <= one && -d <= one
        })
        .count();
    let iqr = q3 - q1;
    let agreement_ratio = Rational::new(close as i64, n as i64);
    let consensus = iqr <= Rational::from_integer(MAX_CONSENSUS_IQR)
        && agreement_ratio >= Rational::new(MIN_AGREEMENT.0, MIN_AGREEMENT.1);
    Some(StatementStats {
        n,
        median,
        q1,
        q3,
        iqr,
        agreement_ratio,
        verdict: if consensus {
            Verdict::Consensus
        } else {
            Verdict::NoConsensus
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn ten_panelist_fixture() {
        // Sorted: lower half 6,7,7,7,7 -> 7; upper half 8,8,9,9,9 -> 9.
        // Within [6.5, 8.5]: four 7s and two 8s.
        let s = statement_stats(&[6, 7, 7, 7, 7, 8, 8, 9, 9, 9]).unwrap();
        assert_eq!(s.median, r(15, 2));
        assert_eq!(s.q1, r(7, 1));
        assert_eq!(s.q3, r(9, 1));
        assert_eq!(s.iqr, r(2, 1));
        assert_eq!(s.agreement_ratio, r(3, 5));
        assert_eq!(s.verdict, Verdict::NoConsensus);
    }

    #[test]
    fn unanimity() {
        let s = statement_stats(&[5; 10]).unwrap();
        assert_eq!(s.median, r(5, 1));
        assert_eq!(s.iqr, r(0, 1));
        assert_eq!(s.agreement_ratio, r(1, 1));
        assert_eq!(s.verdict, Verdict::Consensus);
    }

    #[test]
    fn maximal_spread() {
        let s = statement_stats(&[1, 9]).unwrap();
        assert_eq!(s.iqr, r(8, 1));
        assert_eq!(s.verdict, Verdict::NoConsensus);
    }

    #[test]
    fn odd_sample_excludes_median_from_halves() {
        let (q1, m, q3) = tukey_summary(&[1, 2, 3, 4, 5]).unwrap();
        assert_eq!((q1, m, q3), (r(3, 2), r(3, 1), r(9, 2)));
        let (q1, m, q3) = tukey_summary(&[4]).unwrap();
        assert_eq!((q1, m, q3), (r(4, 1), r(4, 1), r(4, 1)));
        assert!(tukey_summary(&[]).is_none());
    }
}
