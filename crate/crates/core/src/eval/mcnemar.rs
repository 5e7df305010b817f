//! McNemar's paired significance test over the discordant predictions of
//! two classifiers scored on the same instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::PredictionRecord;

/// Discordant-pair count at which the test switches from the exact binomial
/// to the continuity-corrected chi-square approximation.
pub const EXACT_LIMIT: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    ExactBinomial,
    ChiSquareCorrected,
}

/// Test result. `b_count` is instances the first model got right and the
/// second wrong; `c_count` the reverse. The continuity-corrected chi-square
/// statistic is reported for reference even when the exact method supplied
/// the p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarReport {
    pub b_count: u64,
    pub c_count: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub method: McNemarMethod,
}

/// Compare two prediction sets, aligned by pair_id. The id sets must match
/// exactly; ordering may differ.
pub fn mcnemar(a: &[PredictionRecord], b: &[PredictionRecord]) -> Result<McNemarReport> {
    let mut b_correct: HashMap<&str, bool> = HashMap::with_capacity(b.len());
    for r in b {
        if b_correct.insert(&r.pair_id, r.is_correct()).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate pair_id {:?} in the second prediction set",
                r.pair_id
            )));
        }
    }
    let mut seen_a: HashMap<&str, ()> = HashMap::with_capacity(a.len());
    let mut b_count = 0u64;
    let mut c_count = 0u64;
    let mut missing: Vec<String> = Vec::new();
    for r in a {
        if seen_a.insert(&r.pair_id, ()).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate pair_id {:?} in the first prediction set",
                r.pair_id
            )));
        }
        match b_correct.get(r.pair_id.as_str()) {
            None => missing.push(r.pair_id.clone()),
            Some(&other_correct) => match (r.is_correct(), other_correct) {
                (true, false) => b_count += 1,
                (false, true) => c_count += 1,
                _ => {}
            },
        }
    }
    let mut extra: Vec<String> = b
        .iter()
        .filter(|r| !seen_a.contains_key(r.pair_id.as_str()))
        .map(|r| r.pair_id.clone())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort();
        extra.sort();
        return Err(Error::Alignment { missing, extra });
    }
    Ok(mcnemar_from_counts(b_count, c_count))
}

/// The test on raw discordant counts. Below [`EXACT_LIMIT`] discordant
/// pairs the p-value is the exact two-sided binomial tail under a fair
/// coin; at or above it, the continuity-corrected chi-square survival.
pub fn mcnemar_from_counts(b_count: u64, c_count: u64) -> McNemarReport {
    let n = b_count + c_count;
    let statistic = if n == 0 {
        0.0
    } else {
        let diff = (b_count as f64 - c_count as f64).abs();
        (diff - 1.0).powi(2) / n as f64
    };
    let (p_value, method) = if n < EXACT_LIMIT {
        (exact_binomial_p(b_count, c_count), McNemarMethod::ExactBinomial)
    } else {
        (chi_square_survival(statistic), McNemarMethod::ChiSquareCorrected)
    };
    McNemarReport {
        b_count,
        c_count,
        statistic,
        p_value,
        method,
    }
}

/// Two-sided exact binomial p-value under X ~ Bin(n, 1/2): the probability
/// of a split at least as lopsided as the observed one. Both tails are
/// summed with exact integer arithmetic, so the result is a dyadic rational
/// rounded once to f64.
fn exact_binomial_p(b_count: u64, c_count: u64) -> f64 {
    let n = b_count + c_count;
    if n == 0 {
        return 1.0;
    }
    let k = b_count.min(c_count);
    let lo: u128 = (0..=k).map(|i| binomial(n, i)).sum();
    let hi: u128 = (n - k..=n).map(|i| binomial(n, i)).sum();
    let total = if k == n - k { lo + hi - binomial(n, k) } else { lo + hi };
    let p = total as f64 / 2f64.powi(n as i32);
    p.min(1.0)
}

/// C(n, k) exactly; safe for the n < 64 range the exact branch uses.
fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut num = 1u128;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Survival function of the chi-square distribution with one degree of
/// freedom: P[X > x] = erfc(sqrt(x / 2)).
fn chi_square_survival(x: f64) -> f64 {
    libm::erfc((x / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::StanceLabel;
    use proptest::prelude::*;

    fn record(id: &str, correct: bool) -> PredictionRecord {
        let gold = StanceLabel::Support;
        let predicted = if correct { gold } else { StanceLabel::Oppose };
        PredictionRecord {
            pair_id: id.to_string(),
            gold,
            predicted,
            probs: vec![0.5, 0.5],
            cosine: None,
        }
    }

    fn records(pattern: &[bool]) -> Vec<PredictionRecord> {
        pattern
            .iter()
            .enumerate()
            .map(|(i, &c)| record(&format!("m-{i}"), c))
            .collect()
    }

    #[test]
    fn identical_prediction_sets_give_p_one() {
        let a = records(&[true, false, true, true]);
        let report = mcnemar(&a, &a).unwrap();
        assert_eq!(report.b_count, 0);
        assert_eq!(report.c_count, 0);
        assert_eq!(report.p_value, 1.0);
        assert_eq!(report.statistic, 0.0);
    }

    #[test]
    fn one_sided_ten_discordants_match_the_closed_form() {
        // b=0, c=10: both tails hold a single pattern each, so
        // p = 2 * 0.5^10 exactly.
        let report = mcnemar_from_counts(0, 10);
        assert_eq!(report.method, McNemarMethod::ExactBinomial);
        assert_eq!(report.p_value, 2.0 * 0.5f64.powi(10));
    }

    #[test]
    fn balanced_split_has_p_one() {
        let report = mcnemar_from_counts(7, 7);
        assert_eq!(report.p_value, 1.0);
    }

    #[test]
    fn method_switches_at_the_exact_limit() {
        assert_eq!(
            mcnemar_from_counts(12, 12).method,
            McNemarMethod::ExactBinomial
        );
        assert_eq!(
            mcnemar_from_counts(12, 13).method,
            McNemarMethod::ChiSquareCorrected
        );
    }

    #[test]
    fn chi_square_branch_uses_the_corrected_statistic() {
        // b=10, c=40: statistic = (30 - 1)^2 / 50 = 16.82.
        let report = mcnemar_from_counts(10, 40);
        assert!((report.statistic - 16.82).abs() < 1e-12);
        assert_eq!(report.method, McNemarMethod::ChiSquareCorrected);
        assert!(report.p_value < 1e-3);
    }

    /// Textbook critical values of the chi-square distribution (1 dof).
    #[test]
    fn chi_square_survival_matches_published_critical_values() {
        assert!((chi_square_survival(3.841) - 0.05).abs() < 5e-5);
        assert!((chi_square_survival(6.635) - 0.01).abs() < 5e-5);
        assert!((chi_square_survival(10.828) - 0.001).abs() < 5e-6);
    }

    #[test]
    fn mismatched_id_sets_are_an_alignment_error() {
        let a = records(&[true, false]);
        let mut b = records(&[true, false]);
        b[1].pair_id = "other".to_string();
        match mcnemar(&a, &b) {
            Err(Error::Alignment { missing, extra }) => {
                assert_eq!(missing, vec!["m-1".to_string()]);
                assert_eq!(extra, vec!["other".to_string()]);
            }
            other => panic!("expected an alignment error, got {other:?}"),
        }
    }

    #[test]
    fn order_of_records_does_not_matter() {
        let a = records(&[true, false, false, true, true]);
        let mut b = records(&[false, true, false, true, false]);
        let forward = mcnemar(&a, &b).unwrap();
        b.reverse();
        assert_eq!(forward, mcnemar(&a, &b).unwrap());
    }

    /// Brute-force oracle: enumerate every assignment of n discordant pairs
    /// to the two models and count outcomes at least as lopsided.
    fn enumerated_p(b_count: u64, c_count: u64) -> f64 {
        let n = b_count + c_count;
        let observed = (b_count as i64 - c_count as i64).abs();
        let mut extreme = 0u64;
        for pattern in 0u64..(1 << n) {
            let heads = u64::from(pattern.count_ones()) as i64;
            let tails = n as i64 - heads;
            if (heads - tails).abs() >= observed {
                extreme += 1;
            }
        }
        extreme as f64 / (1u64 << n) as f64
    }

    proptest! {
        #[test]
        fn exact_p_matches_brute_force_enumeration(b in 0u64..=8, c in 0u64..=8) {
            prop_assume!(b + c >= 1);
            let report = mcnemar_from_counts(b, c);
            prop_assert_eq!(report.method, McNemarMethod::ExactBinomial);
            let oracle = enumerated_p(b, c);
            prop_assert!((report.p_value - oracle).abs() < 1e-12,
                "b={} c={}: got {}, oracle {}", b, c, report.p_value, oracle);
        }

        /// Swapping the two models swaps the counts and keeps the p-value.
        #[test]
        fn test_is_symmetric_in_its_arguments(
            a_pattern in proptest::collection::vec(any::<bool>(), 1..40),
            b_pattern in proptest::collection::vec(any::<bool>(), 1..40),
        ) {
            let n = a_pattern.len().min(b_pattern.len());
            let a = records(&a_pattern[..n]);
            let b = records(&b_pattern[..n]);
            let ab = mcnemar(&a, &b).unwrap();
            let ba = mcnemar(&b, &a).unwrap();
            prop_assert_eq!(ab.b_count, ba.c_count);
            prop_assert_eq!(ab.c_count, ba.b_count);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert_eq!(ab.statistic, ba.statistic);
        }
    }
}
