use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledFrameRecord, LabelingError, UNLABELED};

pub const POLICY_NAME: &str = "uniform_undersample";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalancePolicy {
    /// Upper bound on max/min label count after balancing.
    pub target_ratio: f64,
    pub seed: u64,
    /// Labels that must be present. Defaults to every label seen except
    /// the unlabeled sentinel.
    pub labels: Option<Vec<String>>,
}

impl Default for BalancePolicy {
    fn default() -> Self {
        BalancePolicy {
            target_ratio: 1.1,
            seed: 2045,
            labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub policy: String,
    pub scope: String,
    pub seed: u64,
    pub target_ratio: f64,
    pub cap: usize,
    pub before: BTreeMap<String, usize>,
    pub after: BTreeMap<String, usize>,
    /// Records dropped because their label is not being balanced.
    pub excluded: usize,
}

impl BalanceReport {
    pub fn achieved_ratio(&self) -> f64 {
        let max = self.after.values().copied().max().unwrap_or(0);
        let min = self.after.values().copied().min().unwrap_or(0);
        if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct BalanceOutcome {
    pub subset: Vec<LabeledFrameRecord>,
    pub report: BalanceReport,
}

fn label_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the corpus seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

/// Undersample over-represented labels, uniformly at random, until no label
/// has more than `floor(min * target_ratio)` records. The input is not
/// modified and kept records retain their original order.
pub fn balance_dataset(
    records: &[LabeledFrameRecord],
    policy: &BalancePolicy,
) -> Result<BalanceOutcome, LabelingError> {
    if !(policy.target_ratio.is_finite() && policy.target_ratio >= 1.0) {
        return Err(LabelingError::Policy(format!(
            "target_ratio must be >= 1, got {}",
            policy.target_ratio
        )));
    }
    let labels: BTreeSet<String> = match &policy.labels {
        Some(l) => l.iter().cloned().collect(),
        None => records
            .iter()
            .map(|r| r.label.clone())
            .filter(|l| l != UNLABELED)
            .collect(),
    };
    if labels.is_empty() {
        return Err(LabelingError::EmptyDataset);
    }

    let mut by_label: BTreeMap<String, Vec<usize>> =
        labels.iter().map(|l| (l.clone(), Vec::new())).collect();
    let mut excluded = 0;
    for (i, r) in records.iter().enumerate() {
        match by_label.get_mut(&r.label) {
            Some(v) => v.push(i),
            None => excluded += 1,
        }
    }
    let before: BTreeMap<String, usize> =
        by_label.iter().map(|(l, v)| (l.clone(), v.len())).collect();
    let missing: Vec<String> = before
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(l, _)| l.clone())
        .collect();
    if !missing.is_empty() {
        return Err(LabelingError::MissingLabels {
            missing,
            counts: before,
        });
    }

    let min = *before.values().min().expect("non-empty");
    let cap = ((min as f64) * policy.target_ratio).floor() as usize;
    let mut keep = vec![false; records.len()];
    for (label, idx) in &by_label {
        if idx.len() <= cap {
            for &i in idx {
                keep[i] = true;
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(label_seed(policy.seed, label));
            for j in rand::seq::index::sample(&mut rng, idx.len(), cap) {
                keep[idx[j]] = true;
            }
        }
    }
    let subset: Vec<LabeledFrameRecord> = records
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    let mut after: BTreeMap<String, usize> = labels.iter().map(|l| (l.clone(), 0)).collect();
    for r in &subset {
        *after.get_mut(&r.label).expect("balanced label") += 1;
    }
    Ok(BalanceOutcome {
        subset,
        report: BalanceReport {
            policy: POLICY_NAME.into(),
            scope: "corpus".into(),
            seed: policy.seed,
            target_ratio: policy.target_ratio,
            cap,
            before,
            after,
            excluded,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::RecordMetadata;
    use proptest::prelude::*;

    fn corpus(counts: &[(&str, usize)]) -> Vec<LabeledFrameRecord> {
        let mut out = Vec::new();
        for (label, n) in counts {
            for _ in 0..*n {
                let seq = out.len() as u64;
                out.push(LabeledFrameRecord {
                    session_id: "s".into(),
                    seq,
                    frame_path: format!("f/{seq}"),
                    label: label.to_string(),
                    timestamp: seq as f64 * 0.5,
                    metadata: RecordMetadata::default(),
                });
            }
        }
        out
    }

    fn recount(records: &[LabeledFrameRecord]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in records {
            *m.entry(r.label.clone()).or_default() += 1;
        }
        m
    }

    #[test]
    fn reduces_dominant_label() {
        let records = corpus(&[("a", 1000), ("b", 100), ("c", 100), ("d", 100)]);
        let out = balance_dataset(&records, &BalancePolicy::default()).unwrap();
        let counts = recount(&out.subset);
        assert!(counts["a"] <= 110);
        assert_eq!(counts["b"], 100);
        assert_eq!(counts["c"], 100);
        assert_eq!(counts["d"], 100);
        assert_eq!(out.report.after, counts);
        assert_eq!(records.len(), 1300);
    }

    #[test]
    fn balanced_input_is_a_fixed_point() {
        let records = corpus(&[("a", 100), ("b", 100)]);
        let out = balance_dataset(&records, &BalancePolicy::default()).unwrap();
        assert_eq!(out.subset, records);
    }

    #[test]
    fn same_seed_same_subset() {
        let records = corpus(&[("a", 500), ("b", 60)]);
        let p = BalancePolicy::default();
        let x = balance_dataset(&records, &p).unwrap().subset;
        let y = balance_dataset(&records, &p).unwrap().subset;
        assert_eq!(x, y);
        let other = BalancePolicy { seed: 1, ..p };
        assert_ne!(balance_dataset(&records, &other).unwrap().subset, x);
    }

    #[test]
    fn zero_count_label_aborts_with_report() {
        let records = corpus(&[("a", 5)]);
        let p = BalancePolicy {
            labels: Some(vec!["a".into(), "b".into()]),
            ..BalancePolicy::default()
        };
        match balance_dataset(&records, &p) {
            Err(LabelingError::MissingLabels { missing, counts }) => {
                assert_eq!(missing, vec!["b".to_string()]);
                assert_eq!(counts["a"], 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unlabeled_is_excluded_by_default() {
        let records = corpus(&[(UNLABELED, 7), ("a", 3), ("b", 3)]);
        let out = balance_dataset(&records, &BalancePolicy::default()).unwrap();
        assert_eq!(out.report.excluded, 7);
        assert_eq!(out.subset.len(), 6);
    }

    #[test]
    fn ratio_below_one_rejected() {
        let p = BalancePolicy {
            target_ratio: 0.9,
            ..BalancePolicy::default()
        };
        assert!(balance_dataset(&corpus(&[("a", 1)]), &p).is_err());
    }

    proptest! {
        #[test]
        fn output_meets_ratio_and_report_matches(
            counts in proptest::collection::vec(1usize..300, 1..6),
            ratio in 1.0f64..2.0,
            seed in any::<u64>(),
        ) {
            let labels: Vec<String> = (0..counts.len()).map(|i| format!("l{i}")).collect();
            let spec: Vec<(&str, usize)> =
                labels.iter().map(String::as_str).zip(counts.iter().copied()).collect();
            let records = corpus(&spec);
            let policy = BalancePolicy { target_ratio: ratio, seed, labels: None };
            let out = balance_dataset(&records, &policy).unwrap();
            let after = recount(&out.subset);
            prop_assert_eq!(&after, &out.report.after);
            let max = *after.values().max().unwrap() as f64;
            let min = *after.values().min().unwrap() as f64;
            prop_assert!(max / min <= ratio + 1e-12);
            for (l, n) in &after {
                prop_assert!(*n <= out.report.before[l]);
            }
            // Kept records are a subsequence of the input.
            let mut it = records.iter();
            for r in &out.subset {
                prop_assert!(it.any(|x| x == r));
            }
        }
    }
}
