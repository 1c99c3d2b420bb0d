use std::collections::BTreeMap;

use serde::Serialize;

use super::LabeledFrameRecord;

/// Upper edges, in seconds, of the span-duration histogram buckets. A final
/// open bucket collects anything longer.
pub const DURATION_BUCKETS: [f64; 6] = [10.0, 30.0, 60.0, 120.0, 300.0, 600.0];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionStats {
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    /// Per label, number of contiguous spans falling in each bucket.
    pub span_histogram: BTreeMap<String, Vec<usize>>,
    /// Per label, durations of each contiguous span in seconds.
    pub spans: BTreeMap<String, Vec<f64>>,
}

fn bucket(duration: f64) -> usize {
    DURATION_BUCKETS
        .iter()
        .position(|&edge| duration <= edge)
        .unwrap_or(DURATION_BUCKETS.len())
}

/// Exact per-label counts and the distribution of how long each label
/// stayed active. Spans never cross session boundaries; a span of n records
/// lasts n * cadence.
pub fn session_stats(records: &[LabeledFrameRecord], cadence: f64) -> SessionStats {
    let mut stats = SessionStats {
        total: records.len(),
        ..SessionStats::default()
    };
    let push_span = |stats: &mut SessionStats, label: &str, n: usize| {
        let d = n as f64 * cadence;
        stats.spans.entry(label.to_string()).or_default().push(d);
        stats
            .span_histogram
            .entry(label.to_string())
            .or_insert_with(|| vec![0; DURATION_BUCKETS.len() + 1])[bucket(d)] += 1;
    };
    let mut run: Option<(&str, &str, usize)> = None;
    for r in records {
        *stats.counts.entry(r.label.clone()).or_default() += 1;
        run = match run {
            Some((s, l, n)) if s == r.session_id && l == r.label => Some((s, l, n + 1)),
            Some((_, l, n)) => {
                push_span(&mut stats, l, n);
                Some((&r.session_id, &r.label, 1))
            }
            None => Some((&r.session_id, &r.label, 1)),
        };
    }
    if let Some((_, l, n)) = run {
        push_span(&mut stats, l, n);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::RecordMetadata;

    fn rec(session: &str, label: &str) -> LabeledFrameRecord {
        LabeledFrameRecord {
            session_id: session.into(),
            seq: 0,
            frame_path: String::new(),
            label: label.into(),
            timestamp: 0.0,
            metadata: RecordMetadata::default(),
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(session_stats(&[], 0.5), SessionStats::default());
    }

    #[test]
    fn single_label_single_span() {
        let records: Vec<_> = (0..40).map(|_| rec("s", "a")).collect();
        let stats = session_stats(&records, 0.5);
        assert_eq!(stats.counts["a"], 40);
        assert_eq!(stats.spans["a"], vec![20.0]);
        assert_eq!(stats.span_histogram["a"].iter().sum::<usize>(), 1);
        assert_eq!(stats.span_histogram["a"][1], 1);
    }

    #[test]
    fn spans_split_on_label_and_session() {
        let mut records = vec![rec("s", "a"), rec("s", "a"), rec("s", "b")];
        records.push(rec("t", "b"));
        records.push(rec("t", "a"));
        let stats = session_stats(&records, 0.5);
        assert_eq!(stats.spans["a"], vec![1.0, 0.5]);
        assert_eq!(stats.spans["b"], vec![0.5, 0.5]);
        assert_eq!(stats.total, 5);
    }
}
