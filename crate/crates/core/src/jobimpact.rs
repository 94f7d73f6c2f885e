//! Attribution of job failures to GPU errors, per-XID failure
//! probabilities, job-size statistics, and node downtime accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ErrorRecord, JobRecord, JobStatus};
use crate::taxonomy::ErrorTaxonomy;

/// Attribution parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AttributionParams {
    /// Look-back window before job failure, in seconds.
    pub window: i64,
}

impl Default for AttributionParams {
    fn default() -> Self {
        AttributionParams { window: 20 }
    }
}

/// A failed job together with the GPU errors held responsible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpuFailedJob {
    pub job: JobRecord,
    pub attributed_errors: Vec<ErrorRecord>,
}

impl GpuFailedJob {
    fn new(job: JobRecord, attributed_errors: Vec<ErrorRecord>, window: i64) -> Result<Self> {
        if job.status != JobStatus::Failed {
            return Err(Error::data("attributed job is not failed"));
        }
        for e in &attributed_errors {
            if e.timestamp < job.end - window || e.timestamp > job.end {
                return Err(Error::data("attributed error outside window"));
            }
            if !job.node_ids.contains(&e.node_id) {
                return Err(Error::data("attributed error not on an allocated node"));
            }
        }
        Ok(GpuFailedJob {
            job,
            attributed_errors,
        })
    }
}

/// Mark failed jobs as GPU-failed when a GPU error occurred on one of their
/// nodes within the window before job end. Zombie-flagged jobs are excluded.
///
/// An error only qualifies while the job was running, so for jobs shorter
/// than the window the effective window is clipped to the job start.
pub fn attribute(
    jobs: &[JobRecord],
    errors: &[ErrorRecord],
    params: &AttributionParams,
) -> Result<Vec<GpuFailedJob>> {
    if params.window <= 0 {
        return Err(Error::config("attribution window must be positive"));
    }
    if errors.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::data("error stream must be time-sorted"));
    }

    let mut out = Vec::new();
    for job in jobs {
        if job.status != JobStatus::Failed || job.zombie {
            continue;
        }
        let window_start = (job.end - params.window).max(job.start);
        // Errors are sorted; narrow to the window by binary search.
        let lo = errors.partition_point(|e| e.timestamp < window_start);
        let hi = errors.partition_point(|e| e.timestamp <= job.end);
        let attributed: Vec<ErrorRecord> = errors[lo..hi]
            .iter()
            .filter(|e| job.node_ids.contains(&e.node_id))
            .cloned()
            .collect();
        if !attributed.is_empty() {
            out.push(GpuFailedJob::new(job.clone(), attributed, params.window)?);
        }
    }
    Ok(out)
}

/// One row of the per-error-type job failure table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XidFailureRow {
    pub error_type: String,
    pub gpu_failed_jobs: u64,
    pub encountering_jobs: u64,
    /// gpu_failed / encountering; absent when no job encountered the type.
    pub probability: Option<f64>,
}

fn label_of<'a>(taxonomy: &'a ErrorTaxonomy, e: &'a ErrorRecord) -> &'a str {
    e.xid
        .and_then(|x| taxonomy.label_for_xid(x))
        .unwrap_or(e.pattern_id.as_str())
}

/// Job failure probability per error type:
/// (# GPU-failed jobs encountering the type) / (# jobs encountering it).
///
/// A job "encounters" a type when an error of that type occurred on an
/// allocated node during the job's runtime; the numerator additionally
/// requires the error inside the attribution window, so rows satisfy
/// gpu_failed <= encountering. A job encountering several types appears in
/// every matching row.
pub fn failure_probability_per_xid(
    jobs: &[JobRecord],
    errors: &[ErrorRecord],
    attributed: &[GpuFailedJob],
    taxonomy: &ErrorTaxonomy,
) -> Vec<XidFailureRow> {
    let mut encountering: BTreeMap<String, u64> = BTreeMap::new();
    for job in jobs {
        let lo = errors.partition_point(|e| e.timestamp < job.start);
        let hi = errors.partition_point(|e| e.timestamp <= job.end);
        let mut seen: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for e in &errors[lo..hi] {
            if job.node_ids.contains(&e.node_id) {
                seen.insert(label_of(taxonomy, e));
            }
        }
        for label in seen {
            *encountering.entry(label.to_string()).or_insert(0) += 1;
        }
    }

    let mut failed: BTreeMap<String, u64> = BTreeMap::new();
    for gf in attributed {
        let mut seen: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for e in &gf.attributed_errors {
            seen.insert(label_of(taxonomy, e));
        }
        for label in seen {
            *failed.entry(label.to_string()).or_insert(0) += 1;
        }
    }

    encountering
        .into_iter()
        .map(|(error_type, enc)| {
            let f = failed.get(&error_type).copied().unwrap_or(0);
            XidFailureRow {
                probability: if enc == 0 { None } else { Some(f as f64 / enc as f64) },
                error_type,
                gpu_failed_jobs: f,
                encountering_jobs: enc,
            }
        })
        .collect()
}

/// GPU-count buckets used by the job-size table.
pub const GPU_BUCKETS: &[(u32, u32, &str)] = &[
    (1, 1, "1"),
    (2, 4, "2-4"),
    (5, 8, "5-8"),
    (9, 32, "9-32"),
    (33, 64, "33-64"),
    (65, 128, "65-128"),
    (129, 256, "129-256"),
    (257, u32::MAX, "257+"),
];

pub fn bucket_label(gpu_count: u32) -> &'static str {
    GPU_BUCKETS
        .iter()
        .find(|(lo, hi, _)| gpu_count >= *lo && gpu_count <= *hi)
        .map(|(_, _, label)| *label)
        .unwrap_or("1")
}

/// One row of the job-size table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobSizeRow {
    pub bucket: String,
    pub count: u64,
    pub count_pct: f64,
    pub mean_elapsed_minutes: f64,
    pub p99_elapsed_minutes: f64,
    pub failed: u64,
    pub failed_pct: f64,
    pub ml_gpu_hours: f64,
    pub non_ml_gpu_hours: f64,
}

/// Aggregate jobs into GPU-count buckets with elapsed-time statistics and
/// ML vs non-ML GPU-hour split. Jobs with zero GPUs are ignored.
pub fn job_size_stats(
    jobs: &[JobRecord],
    ml_classifier: impl Fn(&JobRecord) -> bool,
) -> Vec<JobSizeRow> {
    let mut buckets: BTreeMap<&'static str, Vec<&JobRecord>> = BTreeMap::new();
    let mut total = 0u64;
    for job in jobs {
        if job.gpu_count == 0 {
            continue;
        }
        buckets.entry(bucket_label(job.gpu_count)).or_default().push(job);
        total += 1;
    }

    GPU_BUCKETS
        .iter()
        .filter_map(|(_, _, label)| {
            let items = buckets.get(label)?;
            let count = items.len() as u64;
            let mut elapsed: Vec<f64> = items
                .iter()
                .map(|j| j.elapsed_seconds() as f64 / 60.0)
                .collect();
            elapsed.sort_by(|a, b| a.total_cmp(b));
            let mean = elapsed.iter().sum::<f64>() / count as f64;
            let p99_rank = ((0.99 * count as f64).ceil() as usize).clamp(1, elapsed.len());
            let failed = items
                .iter()
                .filter(|j| j.status == JobStatus::Failed)
                .count() as u64;
            let mut ml_hours = 0.0;
            let mut non_ml_hours = 0.0;
            for j in items {
                let gpu_hours = f64::from(j.gpu_count) * j.elapsed_seconds() as f64 / 3600.0;
                if ml_classifier(j) {
                    ml_hours += gpu_hours;
                } else {
                    non_ml_hours += gpu_hours;
                }
            }
            Some(JobSizeRow {
                bucket: label.to_string(),
                count,
                count_pct: 100.0 * count as f64 / total as f64,
                mean_elapsed_minutes: mean,
                p99_elapsed_minutes: elapsed[p99_rank - 1],
                failed,
                failed_pct: 100.0 * failed as f64 / count as f64,
                ml_gpu_hours: ml_hours,
                non_ml_gpu_hours: non_ml_hours,
            })
        })
        .collect()
}

/// A node drain/reboot interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DowntimeInterval {
    pub node_id: String,
    /// Drain begin, UTC seconds.
    pub start: i64,
    /// Health-check pass, UTC seconds.
    pub end: i64,
    pub cause: String,
    /// Reconstructed from error/job streams rather than node-state records.
    #[serde(default)]
    pub estimated: bool,
}

impl DowntimeInterval {
    pub fn duration_hours(&self) -> f64 {
        (self.end - self.start) as f64 / 3600.0
    }
}

/// Downtime summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DowntimeStats {
    pub count: u64,
    pub mean_hours: f64,
    pub p50_hours: f64,
    pub p90_hours: f64,
    pub total_node_hours: f64,
}

pub fn downtime_stats(intervals: &[DowntimeInterval]) -> Result<DowntimeStats> {
    if intervals.iter().any(|i| i.end < i.start) {
        return Err(Error::data("downtime interval with end before start"));
    }
    let mut durations: Vec<f64> = intervals.iter().map(|i| i.duration_hours()).collect();
    durations.sort_by(|a, b| a.total_cmp(b));
    let count = durations.len() as u64;
    let total: f64 = durations.iter().sum();
    let rank = |q: f64| -> f64 {
        if durations.is_empty() {
            return 0.0;
        }
        let r = ((q * count as f64).ceil() as usize).clamp(1, durations.len());
        durations[r - 1]
    };
    Ok(DowntimeStats {
        count,
        mean_hours: if count == 0 { 0.0 } else { total / count as f64 },
        p50_hours: rank(0.5),
        p90_hours: rank(0.9),
        total_node_hours: total,
    })
}

/// Reconstruct downtime intervals when node-state records are unavailable:
/// from the first error requiring a reset on a node until the next job that
/// starts on that node after the error. Intervals are flagged estimated.
pub fn reconstruct_downtime(
    errors: &[ErrorRecord],
    jobs: &[JobRecord],
    taxonomy: &ErrorTaxonomy,
) -> Vec<DowntimeInterval> {
    let mut starts: Vec<(i64, &JobRecord)> = jobs
        .iter()
        .map(|j| (j.start, j))
        .collect();
    starts.sort_by_key(|(t, _)| *t);

    let mut out: Vec<DowntimeInterval> = Vec::new();
    let mut last_end_per_node: BTreeMap<&str, i64> = BTreeMap::new();
    for e in errors {
        let label = label_of(taxonomy, e);
        let requires_reset = taxonomy
            .get(label)
            .map(|t| t.requires_reset)
            .unwrap_or(false);
        if !requires_reset {
            continue;
        }
        // Skip errors inside an already-reconstructed interval for this node.
        if let Some(end) = last_end_per_node.get(e.node_id.as_str()) {
            if e.timestamp <= *end {
                continue;
            }
        }
        let next_start = starts
            .iter()
            .find(|(t, j)| *t > e.timestamp && j.node_ids.contains(&e.node_id))
            .map(|(t, _)| *t);
        if let Some(end) = next_start {
            last_end_per_node.insert(e.node_id.as_str(), end);
            out.push(DowntimeInterval {
                node_id: e.node_id.clone(),
                start: e.timestamp,
                end,
                cause: label.to_string(),
                estimated: true,
            });
        }
    }
    out
}
