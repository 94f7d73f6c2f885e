//! Synthetic error-log and job-trace generation with ground-truth
//! manifests, so every estimator can be validated against a known
//! generating process.

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FleetConfig;
use crate::taxonomy::ErrorTaxonomy;

/// Epoch base for generated timestamps: 2024-01-01T00:00:00Z.
pub const EPOCH_BASE: i64 = 1_704_067_200;

/// Error-burst shape: with `burst_prob` a base event is repeated, with the
/// total occurrence count drawn from `burst_len` and gaps between
/// occurrences drawn from `intra_gap_secs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BurstSpec {
    pub burst_prob: f64,
    pub burst_len: (u32, u32),
    pub intra_gap_secs: (i64, i64),
}

/// A propagation pair planted into the stream: after each source-type
/// event, with the given probability a target-type event follows `gap_secs`
/// later on the same GPU.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedEdge {
    pub source: String,
    pub target: String,
    pub probability: f64,
    pub gap_secs: i64,
}

/// Job-trace shape, including the error/failure coupling used to validate
/// attribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobSpec {
    pub arrival_per_hour: f64,
    /// (lo, hi, weight) GPU-count buckets.
    pub bucket_weights: Vec<(u32, u32, f64)>,
    pub mean_elapsed_hours: f64,
    /// Fraction of non-coupled jobs that fail for non-GPU reasons.
    pub fail_fraction: f64,
    /// Fraction of jobs planted to fail within the window after an error.
    pub coupling_fraction: f64,
    pub window_secs: i64,
    pub ml_fraction: f64,
}

impl Default for JobSpec {
    fn default() -> Self {
        JobSpec {
            arrival_per_hour: 2.0,
            bucket_weights: vec![
                (1, 1, 0.74),
                (2, 4, 0.24),
                (5, 8, 0.01),
                (9, 32, 0.01),
            ],
            mean_elapsed_hours: 2.0,
            fail_fraction: 0.1,
            coupling_fraction: 0.2,
            window_secs: 20,
            ml_fraction: 0.3,
        }
    }
}

/// Full parameterization of a synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub duration_hours: f64,
    pub fleet: FleetConfig,
    /// label -> events per hour per node (Poisson).
    pub per_type_rate: BTreeMap<String, f64>,
    pub burst: Option<BurstSpec>,
    #[serde(default)]
    pub planted_edges: Vec<PlantedEdge>,
    pub job_spec: Option<JobSpec>,
}

impl GenSpec {
    pub fn validate(&self, taxonomy: &ErrorTaxonomy) -> Result<()> {
        if self.duration_hours <= 0.0 {
            return Err(Error::config("duration must be positive"));
        }
        if self.fleet.node_count == 0 {
            return Err(Error::config("fleet must have at least one node"));
        }
        for (label, rate) in &self.per_type_rate {
            if *rate < 0.0 {
                return Err(Error::config(format!("negative rate for {label}")));
            }
            let entry = taxonomy
                .get(label)
                .ok_or_else(|| Error::config(format!("unknown error type {label}")))?;
            if entry.xids.is_empty() {
                return Err(Error::config(format!(
                    "{label} is inferred and cannot be generated directly"
                )));
            }
        }
        if let Some(b) = &self.burst {
            if !(0.0..=1.0).contains(&b.burst_prob) {
                return Err(Error::config("burst_prob must be in [0,1]"));
            }
            if b.burst_len.0 < 1 || b.burst_len.1 < b.burst_len.0 {
                return Err(Error::config("invalid burst length range"));
            }
            if b.intra_gap_secs.0 < 0 || b.intra_gap_secs.1 < b.intra_gap_secs.0 {
                return Err(Error::config("invalid intra-burst gap range"));
            }
        }
        for e in &self.planted_edges {
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(Error::config("planted edge probability must be in [0,1]"));
            }
            if e.gap_secs < 0 {
                return Err(Error::config("planted edge gap must be non-negative"));
            }
        }
        Ok(())
    }
}

/// One ground-truth event (before burst duplication).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEvent {
    pub id: u64,
    pub label: String,
    pub node_id: String,
    pub gpu_id: String,
    pub timestamp: i64,
    /// Emitted by a planted edge rather than the Poisson background.
    pub planted: bool,
    /// Total log occurrences after burst duplication (>= 1).
    pub burst_occurrences: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub source_id: u64,
    pub target_id: u64,
    pub gap_secs: i64,
}

/// Ground truth for a generated dataset; sufficient to compute every
/// estimator's true value in closed form.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub base_events: Vec<ManifestEvent>,
    pub planted_pairs: Vec<PlantedPair>,
    pub gpu_failed_jobs: Vec<String>,
    pub ml_jobs: Vec<String>,
    pub bucket_counts: BTreeMap<String, u64>,
    pub total_log_lines: u64,
    pub total_jobs: u64,
}

/// JSONL representation: one tagged object per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifestLine {
    Event(ManifestEvent),
    Pair(PlantedPair),
    GpuFailedJob { job_id: String },
    MlJob { job_id: String },
    Summary {
        bucket_counts: BTreeMap<String, u64>,
        total_log_lines: u64,
        total_jobs: u64,
    },
}

impl Manifest {
    pub fn count_by_label(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for e in &self.base_events {
            *counts.entry(e.label.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.base_events {
            out.push_str(&serde_json::to_string(&ManifestLine::Event(e.clone()))?);
            out.push('\n');
        }
        for p in &self.planted_pairs {
            out.push_str(&serde_json::to_string(&ManifestLine::Pair(p.clone()))?);
            out.push('\n');
        }
        for j in &self.gpu_failed_jobs {
            out.push_str(&serde_json::to_string(&ManifestLine::GpuFailedJob {
                job_id: j.clone(),
            })?);
            out.push('\n');
        }
        for j in &self.ml_jobs {
            out.push_str(&serde_json::to_string(&ManifestLine::MlJob {
                job_id: j.clone(),
            })?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&ManifestLine::Summary {
            bucket_counts: self.bucket_counts.clone(),
            total_log_lines: self.total_log_lines,
            total_jobs: self.total_jobs,
        })?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str::<ManifestLine>(line)? {
                ManifestLine::Event(e) => m.base_events.push(e),
                ManifestLine::Pair(p) => m.planted_pairs.push(p),
                ManifestLine::GpuFailedJob { job_id } => m.gpu_failed_jobs.push(job_id),
                ManifestLine::MlJob { job_id } => m.ml_jobs.push(job_id),
                ManifestLine::Summary {
                    bucket_counts,
                    total_log_lines,
                    total_jobs,
                } => {
                    m.bucket_counts = bucket_counts;
                    m.total_log_lines = total_log_lines;
                    m.total_jobs = total_jobs;
                }
            }
        }
        Ok(m)
    }
}

fn node_name(i: u32) -> String {
    format!("node{i:03}")
}

fn gpu_bus_address(slot: u32) -> String {
    format!("0000:{:02x}:00", 0x07 + 0x20 * slot)
}

fn rfc3339(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .expect("valid timestamp")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Generate a synthetic error log and its manifest.
///
/// Deterministic under the seed; emitted lines are parseable by the default
/// pattern set.
pub fn gen_error_log(
    spec: &GenSpec,
    taxonomy: &ErrorTaxonomy,
) -> Result<(Vec<String>, Manifest)> {
    spec.validate(taxonomy)?;
    let mut rng = rng_for(spec.seed, 0);
    let gpus_per_node = (spec.fleet.gpus_per_node().round() as u32).max(1);

    // Poisson background per node per type.
    let mut events: Vec<ManifestEvent> = Vec::new();
    let mut next_id = 0u64;
    for node in 0..spec.fleet.node_count {
        for (label, rate) in &spec.per_type_rate {
            if *rate <= 0.0 {
                continue;
            }
            let exp = Exp::new(*rate).expect("positive rate");
            let mut t_hours = 0.0f64;
            loop {
                t_hours += exp.sample(&mut rng);
                if t_hours > spec.duration_hours {
                    break;
                }
                let slot = rng.random_range(0..gpus_per_node);
                events.push(ManifestEvent {
                    id: next_id,
                    label: label.clone(),
                    node_id: node_name(node),
                    gpu_id: gpu_bus_address(slot),
                    timestamp: EPOCH_BASE + (t_hours * 3600.0) as i64,
                    planted: false,
                    burst_occurrences: 1,
                });
                next_id += 1;
            }
        }
    }

    // Planted propagation pairs.
    let mut pairs = Vec::new();
    let background_count = events.len();
    for edge in &spec.planted_edges {
        for i in 0..background_count {
            if events[i].label != edge.source || events[i].planted {
                continue;
            }
            if rng.random_bool(edge.probability) {
                let source = events[i].clone();
                events.push(ManifestEvent {
                    id: next_id,
                    label: edge.target.clone(),
                    node_id: source.node_id,
                    gpu_id: source.gpu_id,
                    timestamp: source.timestamp + edge.gap_secs,
                    planted: true,
                    burst_occurrences: 1,
                });
                pairs.push(PlantedPair {
                    source_id: source.id,
                    target_id: next_id,
                    gap_secs: edge.gap_secs,
                });
                next_id += 1;
            }
        }
    }

    events.sort_by_key(|e| (e.timestamp, e.id));

    // Burst duplication: each occurrence repeats the base line verbatim.
    let mut lines_with_time: Vec<(i64, u64, String)> = Vec::new();
    let mut seq = 0u64;
    for event in events.iter_mut() {
        let entry = taxonomy
            .get(&event.label)
            .ok_or_else(|| Error::config(format!("unknown label {}", event.label)))?;
        let xid = entry.xids[0];
        let message = taxonomy
            .canonical_message(&event.label)
            .expect("canonical message exists");
        let render = |ts: i64, seq: u64| {
            (
                ts,
                seq,
                format!(
                    "{} {} kernel: NVRM: Xid (PCI:{}): {}, {}",
                    rfc3339(ts),
                    event.node_id,
                    event.gpu_id,
                    xid,
                    message
                ),
            )
        };
        lines_with_time.push(render(event.timestamp, seq));
        seq += 1;
        if let Some(burst) = &spec.burst {
            if rng.random_bool(burst.burst_prob) {
                let len = rng.random_range(burst.burst_len.0..=burst.burst_len.1);
                let mut ts = event.timestamp;
                for _ in 1..len {
                    ts += rng.random_range(burst.intra_gap_secs.0..=burst.intra_gap_secs.1);
                    lines_with_time.push(render(ts, seq));
                    seq += 1;
                }
                event.burst_occurrences = len;
            }
        }
    }
    lines_with_time.sort_by_key(|(ts, seq, _)| (*ts, *seq));
    let lines: Vec<String> = lines_with_time.into_iter().map(|(_, _, l)| l).collect();

    let manifest = Manifest {
        total_log_lines: lines.len() as u64,
        base_events: events,
        planted_pairs: pairs,
        gpu_failed_jobs: Vec::new(),
        ml_jobs: Vec::new(),
        bucket_counts: BTreeMap::new(),
        total_jobs: 0,
    };
    Ok((lines, manifest))
}

const ML_NAMES: &[&str] = &[
    "train_llama_7b",
    "model_finetune_bert",
    "train_resnet50",
    "model_diffusion_eval",
];
const NON_ML_NAMES: &[&str] = &[
    "namd_md_run",
    "wrf_forecast",
    "gromacs_solvate",
    "lammps_shear",
    "vasp_relax",
];

/// Generate a job trace CSV coupled to an existing error manifest, and
/// record the planted ground truth (GPU-failed jobs, ML jobs, size buckets)
/// into the manifest.
pub fn gen_job_trace(
    spec: &GenSpec,
    manifest: &mut Manifest,
    taxonomy: &ErrorTaxonomy,
) -> Result<String> {
    spec.validate(taxonomy)?;
    let job_spec = spec
        .job_spec
        .clone()
        .ok_or_else(|| Error::config("spec has no job_spec"))?;
    if job_spec.bucket_weights.is_empty() {
        return Err(Error::config("bucket_weights must be non-empty"));
    }
    if !(0.0..=1.0).contains(&job_spec.coupling_fraction)
        || !(0.0..=1.0).contains(&job_spec.fail_fraction)
        || !(0.0..=1.0).contains(&job_spec.ml_fraction)
    {
        return Err(Error::config("job fractions must be in [0,1]"));
    }
    let mut rng = rng_for(spec.seed, 1);
    let gpus_per_node = (spec.fleet.gpus_per_node().round() as u32).max(1);
    let duration_secs = (spec.duration_hours * 3600.0) as i64;

    // Error times per node, for collision avoidance on non-coupled jobs.
    let mut errors_per_node: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for e in &manifest.base_events {
        errors_per_node.entry(&e.node_id).or_default().push(e.timestamp);
    }
    for times in errors_per_node.values_mut() {
        times.sort_unstable();
    }
    let error_in_window = |nodes: &[String], end: i64, window: i64| -> bool {
        nodes.iter().any(|n| {
            errors_per_node.get(n.as_str()).is_some_and(|times| {
                let lo = times.partition_point(|t| *t < end - window);
                lo < times.len() && times[lo] <= end
            })
        })
    };

    let n_jobs = (job_spec.arrival_per_hour * spec.duration_hours).round() as usize;
    let n_coupled = ((job_spec.coupling_fraction * n_jobs as f64).round() as usize)
        .min(manifest.base_events.len());

    let total_weight: f64 = job_spec.bucket_weights.iter().map(|(_, _, w)| w).sum();
    if total_weight <= 0.0 {
        return Err(Error::config("bucket weights must sum to a positive value"));
    }
    let sample_gpus = |rng: &mut ChaCha8Rng| -> u32 {
        let mut pick = rng.random_range(0.0..total_weight);
        for (lo, hi, w) in &job_spec.bucket_weights {
            if pick < *w {
                return rng.random_range(*lo..=*hi);
            }
            pick -= w;
        }
        job_spec.bucket_weights[0].0
    };

    #[derive(Clone)]
    struct Row {
        job_id: String,
        start: i64,
        end: i64,
        nodes: Vec<String>,
        gpus: u32,
        exit: i32,
        status: &'static str,
        name: String,
        modules: String,
    }

    let elapsed_dist = Exp::new(1.0 / (job_spec.mean_elapsed_hours * 3600.0))
        .map_err(|_| Error::config("mean_elapsed_hours must be positive"))?;
    let mut rows: Vec<Row> = Vec::new();
    let mut job_counter = 0u64;

    let pick_name = |rng: &mut ChaCha8Rng, job_id: &str, ml_jobs: &mut Vec<String>| {
        if rng.random_bool(job_spec.ml_fraction) {
            ml_jobs.push(job_id.to_string());
            let name = ML_NAMES[rng.random_range(0..ML_NAMES.len())].to_string();
            (name, "cuda;pytorch".to_string())
        } else {
            let name = NON_ML_NAMES[rng.random_range(0..NON_ML_NAMES.len())].to_string();
            (name, "cuda;mpi".to_string())
        }
    };

    // Coupled jobs: planted to fail within the window after a chosen error.
    let mut ml_jobs = Vec::new();
    let mut gpu_failed = Vec::new();
    for i in 0..n_coupled {
        // Spread choices over the event list deterministically.
        let event = &manifest.base_events[i * manifest.base_events.len() / n_coupled.max(1)];
        let job_id = format!("job{job_counter:06}");
        job_counter += 1;
        let end = event.timestamp + rng.random_range(1..=job_spec.window_secs.max(1));
        let elapsed = (elapsed_dist.sample(&mut rng) as i64).max(60);
        let gpus = sample_gpus(&mut rng);
        let mut nodes = vec![event.node_id.clone()];
        let extra_nodes = (gpus.div_ceil(gpus_per_node)).saturating_sub(1);
        for k in 0..extra_nodes {
            nodes.push(node_name((k + 1) % spec.fleet.node_count));
        }
        nodes.sort();
        nodes.dedup();
        let (name, modules) = pick_name(&mut rng, &job_id, &mut ml_jobs);
        gpu_failed.push(job_id.clone());
        rows.push(Row {
            job_id,
            start: (end - elapsed).max(0),
            end,
            nodes,
            gpus,
            exit: 1,
            status: "FAILED",
            name,
            modules,
        });
    }

    // Background jobs, kept clear of the attribution window so that planted
    // coupling is exactly the ground truth.
    for _ in n_coupled..n_jobs {
        let job_id = format!("job{job_counter:06}");
        job_counter += 1;
        let gpus = sample_gpus(&mut rng);
        let node_span = gpus.div_ceil(gpus_per_node).min(spec.fleet.node_count);
        let first = rng.random_range(0..spec.fleet.node_count);
        let nodes: Vec<String> = (0..node_span)
            .map(|k| node_name((first + k) % spec.fleet.node_count))
            .collect();
        let elapsed = (elapsed_dist.sample(&mut rng) as i64).max(60);
        let mut end = EPOCH_BASE + rng.random_range(0..duration_secs.max(1));
        let failed = rng.random_bool(job_spec.fail_fraction);
        if failed {
            let mut tries = 0;
            while error_in_window(&nodes, end, job_spec.window_secs) && tries < 1000 {
                end += job_spec.window_secs + 1;
                tries += 1;
            }
        }
        let (name, modules) = pick_name(&mut rng, &job_id, &mut ml_jobs);
        rows.push(Row {
            job_id,
            start: (end - elapsed).max(0),
            end,
            nodes,
            gpus,
            exit: if failed { 1 } else { 0 },
            status: if failed { "FAILED" } else { "COMPLETED" },
            name,
            modules,
        });
    }

    let mut bucket_counts: BTreeMap<String, u64> = BTreeMap::new();
    for row in &rows {
        *bucket_counts
            .entry(crate::jobimpact::bucket_label(row.gpus).to_string())
            .or_insert(0) += 1;
    }

    let mut csv = String::from("job_id,submit,start,end,nodes,gpus,exit,status,name,modules\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.job_id,
            r.start,
            r.start,
            r.end,
            r.nodes.join(";"),
            r.gpus,
            r.exit,
            r.status,
            r.name,
            r.modules
        ));
    }

    manifest.gpu_failed_jobs = gpu_failed;
    manifest.ml_jobs = ml_jobs;
    manifest.bucket_counts = bucket_counts;
    manifest.total_jobs = rows.len() as u64;
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalesce::{coalesce, AnalysisParams};
    use crate::ingest::{parse_error_log, parse_job_log, PatternSet};
    use std::io::Cursor;

    fn small_spec() -> GenSpec {
        let mut rates = BTreeMap::new();
        rates.insert("xid31".to_string(), 0.02);
        rates.insert("xid48".to_string(), 0.005);
        GenSpec {
            seed: 42,
            duration_hours: 500.0,
            fleet: FleetConfig {
                fleet_name: "test".into(),
                node_count: 10,
                gpus_total: 40,
                gb_per_gpu: 96.0,
                observation_hours: 500.0,
                nodes: None,
            },
            per_type_rate: rates,
            burst: Some(BurstSpec {
                burst_prob: 0.3,
                burst_len: (2, 5),
                intra_gap_secs: (1, 4),
            }),
            planted_edges: vec![],
            job_spec: Some(JobSpec::default()),
        }
    }

    #[test]
    fn zero_rates_give_empty_log() {
        let tax = ErrorTaxonomy::default_table();
        let mut spec = small_spec();
        spec.per_type_rate.clear();
        spec.burst = None;
        let (lines, manifest) = gen_error_log(&spec, &tax).unwrap();
        assert!(lines.is_empty());
        assert!(manifest.base_events.is_empty());
    }

    #[test]
    fn zero_node_fleet_rejected() {
        let tax = ErrorTaxonomy::default_table();
        let mut spec = small_spec();
        spec.fleet.node_count = 0;
        assert!(matches!(gen_error_log(&spec, &tax), Err(Error::Config(_))));
    }

    #[test]
    fn generation_is_byte_identical_under_seed() {
        let tax = ErrorTaxonomy::default_table();
        let spec = small_spec();
        let (lines_a, manifest_a) = gen_error_log(&spec, &tax).unwrap();
        let (lines_b, manifest_b) = gen_error_log(&spec, &tax).unwrap();
        assert_eq!(lines_a, lines_b);
        assert_eq!(manifest_a.base_events, manifest_b.base_events);
    }

    #[test]
    fn parser_generator_round_trip() {
        let tax = ErrorTaxonomy::default_table();
        let pat = PatternSet::default_nvidia(&tax);
        let spec = small_spec();
        let (lines, manifest) = gen_error_log(&spec, &tax).unwrap();
        let text = lines.join("\n");
        let out = parse_error_log(Cursor::new(text), &pat, &tax).unwrap();
        assert_eq!(out.matched as u64, manifest.total_log_lines);
        assert_eq!(out.skipped, 0);
        let occurrences: u64 = manifest
            .base_events
            .iter()
            .map(|e| u64::from(e.burst_occurrences))
            .sum();
        assert_eq!(out.matched as u64, occurrences);
    }

    #[test]
    fn poisson_count_within_3_sigma() {
        let tax = ErrorTaxonomy::default_table();
        let mut spec = small_spec();
        spec.burst = None;
        spec.per_type_rate.clear();
        spec.per_type_rate.insert("xid31".into(), 0.01);
        spec.fleet.node_count = 100;
        spec.fleet.gpus_total = 400;
        spec.duration_hours = 1000.0;
        // Expected 0.01 * 100 * 1000 = 1000 events; 3 sigma ~ 95.
        let (_, manifest) = gen_error_log(&spec, &tax).unwrap();
        let n = manifest.base_events.len() as f64;
        assert!((n - 1000.0).abs() < 95.0, "count {n} outside 3 sigma");
    }

    #[test]
    fn coalesced_count_recovers_manifest_base_count() {
        // Sparse background: accidental adjacency is negligible, so the
        // coalesced count equals the pre-burst manifest count.
        let tax = ErrorTaxonomy::default_table();
        let pat = PatternSet::default_nvidia(&tax);
        let spec = small_spec();
        let (lines, manifest) = gen_error_log(&spec, &tax).unwrap();
        let parsed = parse_error_log(Cursor::new(lines.join("\n")), &pat, &tax).unwrap();
        let coalesced = coalesce(&parsed.records, &AnalysisParams::default()).unwrap();
        assert_eq!(coalesced.len(), manifest.base_events.len());
        let mean_occ: f64 = coalesced.iter().map(|c| f64::from(c.occurrences)).sum::<f64>()
            / coalesced.len() as f64;
        // burst_prob 0.3 with lengths 2..=5 gives mean 1 + 0.3 * 2.5 = 1.75.
        assert!((mean_occ - 1.75).abs() < 0.25, "mean occurrences {mean_occ}");
    }

    #[test]
    fn planted_edges_recorded_in_manifest() {
        let tax = ErrorTaxonomy::default_table();
        let mut spec = small_spec();
        spec.burst = None;
        spec.planted_edges = vec![PlantedEdge {
            source: "xid48".into(),
            target: "xid63".into(),
            probability: 1.0,
            gap_secs: 2,
        }];
        let (_, manifest) = gen_error_log(&spec, &tax).unwrap();
        let sources = manifest
            .base_events
            .iter()
            .filter(|e| e.label == "xid48")
            .count();
        assert_eq!(manifest.planted_pairs.len(), sources);
    }

    #[test]
    fn job_trace_coupling_zero_plants_nothing() {
        let tax = ErrorTaxonomy::default_table();
        let mut spec = small_spec();
        spec.job_spec = Some(JobSpec {
            coupling_fraction: 0.0,
            ..JobSpec::default()
        });
        let (_, mut manifest) = gen_error_log(&spec, &tax).unwrap();
        let csv = gen_job_trace(&spec, &mut manifest, &tax).unwrap();
        assert!(manifest.gpu_failed_jobs.is_empty());
        let parsed = parse_job_log(Cursor::new(csv)).unwrap();
        assert_eq!(parsed.matched as u64, manifest.total_jobs);
    }

    #[test]
    fn job_trace_parses_and_matches_buckets() {
        let tax = ErrorTaxonomy::default_table();
        let spec = small_spec();
        let (_, mut manifest) = gen_error_log(&spec, &tax).unwrap();
        let csv = gen_job_trace(&spec, &mut manifest, &tax).unwrap();
        let parsed = parse_job_log(Cursor::new(csv)).unwrap();
        assert_eq!(parsed.skipped, 0);
        let mut observed: BTreeMap<String, u64> = BTreeMap::new();
        for j in &parsed.records {
            *observed
                .entry(crate::jobimpact::bucket_label(j.gpu_count).to_string())
                .or_insert(0) += 1;
        }
        assert_eq!(observed, manifest.bucket_counts);
    }

    #[test]
    fn manifest_jsonl_round_trip() {
        let tax = ErrorTaxonomy::default_table();
        let spec = small_spec();
        let (_, mut manifest) = gen_error_log(&spec, &tax).unwrap();
        let _ = gen_job_trace(&spec, &mut manifest, &tax).unwrap();
        let text = manifest.to_jsonl().unwrap();
        let back = Manifest::from_jsonl(&text).unwrap();
        assert_eq!(back.base_events, manifest.base_events);
        assert_eq!(back.gpu_failed_jobs, manifest.gpu_failed_jobs);
        assert_eq!(back.bucket_counts, manifest.bucket_counts);
    }
}
