//! Error coalescing: merge identical, temporally adjacent error records
//! from the same GPU into single coalesced errors with persistence durations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ErrorRecord;

/// Shared analysis parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalysisParams {
    /// Merge window in seconds.
    pub delta_t: i64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { delta_t: 5 }
    }
}

impl AnalysisParams {
    pub fn new(delta_t: i64) -> Result<Self> {
        if delta_t <= 0 {
            return Err(Error::config("delta_t must be positive"));
        }
        Ok(AnalysisParams { delta_t })
    }
}

/// A deduplicated error burst with its persistence duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalescedError {
    /// First occurrence of the burst.
    pub representative: ErrorRecord,
    pub start: i64,
    pub last: i64,
    /// `last - start`; zero for singletons.
    pub persistence: i64,
    pub occurrences: u32,
}

fn check_sorted(events: &[ErrorRecord]) -> Result<()> {
    if let Some(w) = events.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::data(format!(
            "input events are not sorted by timestamp (violation at index {})",
            w + 1
        )));
    }
    Ok(())
}

/// Merge identical error records from the same GPU whose gaps from the
/// latest absorbed occurrence are within `delta_t`.
///
/// Grouping key is (node, GPU, pattern). Within a group the scan moves
/// forward; an event extends the current coalesced error iff its message
/// equals the first event's message and its gap from the latest absorbed
/// event is at most `delta_t` (sliding window on the latest timestamp).
/// Any other event starts a new coalesced error. Output preserves
/// start-time order; ties keep input order.
pub fn coalesce(events: &[ErrorRecord], params: &AnalysisParams) -> Result<Vec<CoalescedError>> {
    if params.delta_t <= 0 {
        return Err(Error::config("delta_t must be positive"));
    }
    check_sorted(events)?;

    // Group while remembering original indices for stable output ordering.
    let mut groups: BTreeMap<(&str, &str, &str), Vec<usize>> = BTreeMap::new();
    for (idx, e) in events.iter().enumerate() {
        groups
            .entry((e.node_id.as_str(), e.gpu_id.as_str(), e.pattern_id.as_str()))
            .or_default()
            .push(idx);
    }

    let mut out: Vec<(usize, CoalescedError)> = Vec::new();
    for indices in groups.values() {
        let mut i = 0usize;
        while i < indices.len() {
            let first = &events[indices[i]];
            let rep_idx = indices[i];
            let start = first.timestamp;
            let mut latest = first.timestamp;
            let mut occurrences = 1u32;
            while i + 1 < indices.len() {
                let next = &events[indices[i + 1]];
                if next.message == first.message && next.timestamp - latest <= params.delta_t {
                    latest = next.timestamp;
                    occurrences += 1;
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((
                rep_idx,
                CoalescedError {
                    representative: first.clone(),
                    start,
                    last: latest,
                    persistence: latest - start,
                    occurrences,
                },
            ));
            i += 1;
        }
    }

    out.sort_by_key(|(rep_idx, c)| (c.start, *rep_idx));
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

/// Per-type summary of a coalesced stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoalesceSummary {
    pub total: u64,
    pub per_type: BTreeMap<String, TypeSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeSummary {
    pub count: u64,
    pub total_occurrences: u64,
    pub mean_occurrences: f64,
    pub persistence_p50: i64,
    pub persistence_p90: i64,
    pub persistence_p99: i64,
    pub persistence_max: i64,
}

/// Nearest-rank quantile of a sorted slice.
fn nearest_rank(sorted: &[i64], q: f64) -> i64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Deterministic per-pattern summary with nearest-rank quantiles.
pub fn coalesce_stats(coalesced: &[CoalescedError]) -> CoalesceSummary {
    let mut per_type: BTreeMap<String, Vec<&CoalescedError>> = BTreeMap::new();
    for c in coalesced {
        per_type
            .entry(c.representative.pattern_id.clone())
            .or_default()
            .push(c);
    }
    let per_type = per_type
        .into_iter()
        .map(|(label, items)| {
            let mut persistences: Vec<i64> = items.iter().map(|c| c.persistence).collect();
            persistences.sort_unstable();
            let total_occurrences: u64 = items.iter().map(|c| u64::from(c.occurrences)).sum();
            let count = items.len() as u64;
            (
                label,
                TypeSummary {
                    count,
                    total_occurrences,
                    mean_occurrences: total_occurrences as f64 / count as f64,
                    persistence_p50: nearest_rank(&persistences, 0.50),
                    persistence_p90: nearest_rank(&persistences, 0.90),
                    persistence_p99: nearest_rank(&persistences, 0.99),
                    persistence_max: *persistences.last().unwrap_or(&0),
                },
            )
        })
        .collect();
    CoalesceSummary {
        total: coalesced.len() as u64,
        per_type,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Category;

    pub(crate) fn record(ts: i64, node: &str, gpu: &str, pattern: &str, msg: &str) -> ErrorRecord {
        ErrorRecord {
            timestamp: ts,
            node_id: node.into(),
            gpu_id: gpu.into(),
            xid: Some(31),
            pattern_id: pattern.into(),
            message: msg.into(),
            category: Category::Hardware,
        }
    }

    fn same_gpu(ts: &[i64]) -> Vec<ErrorRecord> {
        ts.iter()
            .map(|&t| record(t, "node1", "0000:07:00", "xid31", "MMU fault"))
            .collect()
    }

    #[test]
    fn single_event_is_singleton() {
        let out = coalesce(&same_gpu(&[100]), &AnalysisParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].persistence, 0);
        assert_eq!(out[0].occurrences, 1);
    }

    #[test]
    fn sliding_window_hand_case() {
        // t = 0,4,8,20 with delta_t = 5: gaps 4,4 merge (sliding on latest),
        // 20 - 8 = 12 starts a new coalesced error.
        let out = coalesce(&same_gpu(&[0, 4, 8, 20]), &AnalysisParams::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].start, out[0].last, out[0].persistence, out[0].occurrences), (0, 8, 8, 3));
        assert_eq!((out[1].start, out[1].persistence, out[1].occurrences), (20, 0, 1));
    }

    #[test]
    fn message_mismatch_breaks_chain() {
        let mut events = same_gpu(&[0]);
        events.push(record(1, "node1", "0000:07:00", "xid31", "different fault"));
        events.push(record(2, "node1", "0000:07:00", "xid31", "MMU fault"));
        let out = coalesce(&events, &AnalysisParams::default()).unwrap();
        // The interleaved different message terminates the first chain.
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn different_gpus_never_merge() {
        let mut events = same_gpu(&[0]);
        events.push(record(1, "node1", "0000:27:00", "xid31", "MMU fault"));
        let out = coalesce(&events, &AnalysisParams::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn equal_timestamps_merge() {
        let out = coalesce(&same_gpu(&[10, 10, 10]), &AnalysisParams::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].occurrences, 3);
        assert_eq!(out[0].persistence, 0);
    }

    #[test]
    fn unsorted_input_rejected() {
        let events = same_gpu(&[10, 5]);
        assert!(matches!(
            coalesce(&events, &AnalysisParams::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn occurrences_sum_preserved() {
        let events = same_gpu(&[0, 1, 2, 30, 31, 90]);
        let out = coalesce(&events, &AnalysisParams::default()).unwrap();
        let total: u32 = out.iter().map(|c| c.occurrences).sum();
        assert_eq!(total as usize, events.len());
    }

    #[test]
    fn idempotent_on_singleton_stream() {
        let events = same_gpu(&[0, 100, 200]);
        let once = coalesce(&events, &AnalysisParams::default()).unwrap();
        let reps: Vec<ErrorRecord> = once.iter().map(|c| c.representative.clone()).collect();
        let twice = coalesce(&reps, &AnalysisParams::default()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn stats_quantiles_nearest_rank() {
        let empty = coalesce_stats(&[]);
        assert_eq!(empty.total, 0);
        let one = coalesce(&same_gpu(&[0, 4, 8]), &AnalysisParams::default()).unwrap();
        let s = coalesce_stats(&one);
        let t = &s.per_type["xid31"];
        assert_eq!(t.persistence_p50, 8);
        assert_eq!(t.persistence_p99, 8);
    }
}
